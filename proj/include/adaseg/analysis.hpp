#pragma once

// How well |lambda| predicts the exact indicator inside one region.
//
// For a cut of a p-pixel region into p+ and p- pixels the ratio
//   (lambda^2 / 2p) / dJ = 4 p+ p- / p^2
// depends only on p+. With every non-empty ordered 2-partition equally likely,
// p+ is binomially distributed on 1..p-1.

#include "adaseg/errors.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace adaseg
{
	struct QualityCurve
	{
		std::size_t p = 0;
		std::vector<std::pair<double, double>> points; // (xi, Pr{xi <= ratio <= 1})
	};

	inline double indicator_ratio(std::size_t p, std::size_t p_plus)
	{
		double const pd = static_cast<double>(p), pp = static_cast<double>(p_plus);
		return 4.0 * pp * (pd - pp) / (pd * pd);
	}

	// Pr{ratio >= xi}, summed exactly over p+ with log-space binomial weights.
	inline double quality_probability(std::size_t p, double xi)
	{
		if (p < 2)
			throw ConfigError("quality curve needs p >= 2");
		double const pd = static_cast<double>(p);
		// log(2^p - 2)
		double const log_total = pd * std::log(2.0) + std::log1p(-std::exp2(1.0 - pd));
		double const log_fact_p = std::lgamma(pd + 1.0);
		double prob = 0.0;
		for (std::size_t k = 1; k < p; ++k)
		{
			if (indicator_ratio(p, k) < xi)
				continue;
			double const kd = static_cast<double>(k);
			double const log_c = log_fact_p - std::lgamma(kd + 1.0) - std::lgamma(pd - kd + 1.0);
			prob += std::exp(log_c - log_total);
		}
		return std::min(prob, 1.0);
	}

	inline QualityCurve quality_curve(std::size_t p, std::vector<double> const& xi_grid)
	{
		QualityCurve curve{ p, {} };
		for (double xi : xi_grid)
			curve.points.emplace_back(xi, quality_probability(p, xi));
		return curve;
	}

	inline std::vector<double> uniform_grid(double step = 0.01)
	{
		std::vector<double> grid;
		int const n = static_cast<int>(std::lround(1.0 / step));
		for (int i = 0; i <= n; ++i)
			grid.push_back(static_cast<double>(i) / n);
		return grid;
	}

	// Monte Carlo estimate over uniformly drawn non-empty 2-partitions.
	inline double quality_probability_mc(std::size_t p, double xi, std::size_t samples, std::uint64_t seed)
	{
		if (p < 2)
			throw ConfigError("quality curve needs p >= 2");
		std::mt19937_64 rng(seed);
		std::size_t hits = 0;
		for (std::size_t s = 0; s < samples;)
		{
			std::size_t plus = 0;
			for (std::size_t done = 0; done < p; done += 64)
			{
				std::uint64_t word = rng();
				std::size_t const bits = std::min<std::size_t>(64, p - done);
				if (bits < 64)
					word &= (std::uint64_t{ 1 } << bits) - 1;
				plus += static_cast<std::size_t>(__builtin_popcountll(word));
			}
			if (plus == 0 || plus == p)
				continue;
			++s;
			hits += indicator_ratio(p, plus) >= xi ? 1 : 0;
		}
		return static_cast<double>(hits) / static_cast<double>(samples);
	}

	inline std::string quality_csv(QualityCurve const& curve)
	{
		std::string out = "xi,probability\n";
		char buf[64];
		for (auto const& [xi, pr] : curve.points)
		{
			std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", xi, pr);
			out += buf;
		}
		return out;
	}
}
