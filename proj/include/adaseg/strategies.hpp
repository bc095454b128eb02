#pragma once

// Best candidate cutting of a region under a cutting strategy.

#include "adaseg/errors.hpp"
#include "adaseg/image.hpp"
#include "adaseg/indicators.hpp"
#include "adaseg/partition.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace adaseg
{
	enum class CuttingKind
	{
		BestInFamily, // exhaustive exact indicators over axis cuts
		OverallBest,  // analytic sign cut maximizing the first-order indicator
	};

	enum class FamilyMode
	{
		AllPositions, // every interior row/column boundary of the bounding box
		Midpoints,    // only the boundary halving the bounding box
	};

	struct CuttingStrategy
	{
		CuttingKind kind = CuttingKind::OverallBest;
		FamilyMode family = FamilyMode::AllPositions;
		friend bool operator==(CuttingStrategy const&, CuttingStrategy const&) = default;
	};

	inline std::string to_string(CuttingStrategy s)
	{
		if (s.kind == CuttingKind::OverallBest)
			return "overall-best";
		return s.family == FamilyMode::Midpoints ? "best-in-family-midpoints" : "best-in-family";
	}

	inline CuttingStrategy parse_cutting_strategy(std::string const& name)
	{
		if (name == "overall-best")
			return { CuttingKind::OverallBest, FamilyMode::AllPositions };
		if (name == "best-in-family")
			return { CuttingKind::BestInFamily, FamilyMode::AllPositions };
		if (name == "best-in-family-midpoints")
			return { CuttingKind::BestInFamily, FamilyMode::Midpoints };
		throw ConfigError("unknown cutting strategy '" + name + "'");
	}

	struct CandidateSplit
	{
		RegionId region = 0;
		Cutting cut;
		double delta_j = 0.0; // exact indicator over the scored channels
		// Overall best: lambda* per channel. Family cuts: signed lambda of the chosen cut.
		std::array<double, MaxChannels> lambda_star{};
		std::optional<int> channel; // k* for sign cuts
		bool splittable = false;
	};

	inline CandidateSplit best_cut_in_family(ImageBuffer const& img, Partition const& partition, RegionId id,
		FamilyMode mode, ChannelSet channels)
	{
		Region const& r = partition.region(id);
		CandidateSplit best;
		best.region = id;
		best.cut = AxisCut{};
		int const w = partition.width();
		std::size_t const p = r.pixels.size();
		BoundingBox const& bb = r.bbox;

		// Per-column and per-row pixel counts and channel sums, restricted to the region.
		std::vector<double> col_n(bb.width()), row_n(bb.height());
		std::array<std::vector<double>, MaxChannels> col_s, row_s;
		std::array<double, MaxChannels> total{};
		for (int k = 0; k < img.channels(); ++k)
		{
			if (!channels.contains(k))
				continue;
			col_s[k].assign(bb.width(), 0.0);
			row_s[k].assign(bb.height(), 0.0);
			total[k] = r.stats.sum_d[k];
		}
		for (auto i : r.pixels)
		{
			int const x = static_cast<int>(i % w) - bb.x0, y = static_cast<int>(i / w) - bb.y0;
			col_n[x] += 1.0;
			row_n[y] += 1.0;
			for (int k = 0; k < img.channels(); ++k)
				if (channels.contains(k))
				{
					double const d = img.at(i, k);
					col_s[k][x] += d;
					row_s[k][y] += d;
				}
		}

		double const pd = static_cast<double>(p);
		auto scan = [&](Axis axis, std::vector<double> const& n, std::array<std::vector<double>, MaxChannels> const& s,
						int origin) {
			int const extent = static_cast<int>(n.size());
			double acc_n = 0.0;
			std::array<double, MaxChannels> acc{};
			int const mid = extent / 2;
			for (int pos = 1; pos < extent; ++pos)
			{
				acc_n += n[pos - 1];
				for (int k = 0; k < img.channels(); ++k)
					if (channels.contains(k))
						acc[k] += s[k][pos - 1];
				if (mode == FamilyMode::Midpoints && pos != mid)
					continue;
				if (acc_n == 0.0 || acc_n == pd)
					continue;
				double const pp = acc_n, pm = pd - acc_n;
				double dj = 0.0;
				std::array<double, MaxChannels> lambda{};
				for (int k = 0; k < img.channels(); ++k)
				{
					if (!channels.contains(k))
						continue;
					double const sp = acc[k], sm = total[k] - acc[k];
					double const diff = sp / pp - sm / pm;
					dj += pp * pm / (2.0 * pd) * diff * diff;
					double const mean = total[k] / pd;
					lambda[k] = (pp * mean - sp) - (pm * mean - sm);
				}
				if (dj > best.delta_j)
				{
					best.delta_j = dj;
					best.cut = AxisCut{ axis, origin + pos };
					best.lambda_star = lambda;
				}
			}
		};
		scan(Axis::Vertical, col_n, col_s, bb.x0);
		scan(Axis::Horizontal, row_n, row_s, bb.y0);
		best.splittable = best.delta_j > 0.0;
		return best;
	}

	inline CandidateSplit best_cut_overall(ImageBuffer const& img, Partition const& partition, RegionId id,
		ChannelSet channels)
	{
		Region const& r = partition.region(id);
		CandidateSplit best;
		best.region = id;
		best.cut = SignCut{};
		if (r.stats.constant(channels))
			return best;

		for (int k = 0; k < img.channels(); ++k)
			if (channels.contains(k))
				best.lambda_star[k] = optimal_sign_cut(img, partition, id, k).lambda_star;
		auto const choice = best_channel(std::span<double const>(best.lambda_star.data(), img.channels()), channels);
		best.channel = choice.channel;
		best.cut = SignCut{ choice.channel };
		if (choice.all_constant)
			return best;

		auto const sides = side_stats(partition, id, best.cut, img);
		if (sides.plus.pixel_count == 0 || sides.minus.pixel_count == 0)
			return best;
		best.delta_j = exact_indicator(sides.plus, sides.minus, channels);
		best.splittable = best.delta_j > 0.0;
		return best;
	}

	inline CandidateSplit best_cut(ImageBuffer const& img, Partition const& partition, RegionId id,
		CuttingStrategy strategy, ChannelSet channels)
	{
		return strategy.kind == CuttingKind::OverallBest
			? best_cut_overall(img, partition, id, channels)
			: best_cut_in_family(img, partition, id, strategy.family, channels);
	}
}
