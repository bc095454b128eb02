#pragma once

// Exact and first-order refinement indicators for a cutting of one region.
//
// The misfit gradient at the region-mean color is dJ/dc_i = mean - d_i, so the
// first-order indicator of a cut is
//   lambda = sum_{R+} (mean - d_i) - sum_{R-} (mean - d_i)
// and the exact indicator (misfit decrease after re-fitting both sides) is
//   dJ = p+ p- / (2p) * (mean+ - mean-)^2 = lambda^2 p / (8 p+ p-).

#include "adaseg/errors.hpp"
#include "adaseg/image.hpp"
#include "adaseg/partition.hpp"

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace adaseg
{
	struct SideStats
	{
		RegionStats plus;
		RegionStats minus;
	};

	// Statistics of R+ and R- accumulated directly from the pixels.
	inline SideStats side_stats(Partition const& partition, RegionId id, Cutting const& cut, ImageBuffer const& img)
	{
		Region const& r = partition.region(id);
		auto const mask = partition.side_mask(id, cut, img);
		std::vector<std::uint32_t> plus, minus;
		plus.reserve(r.pixels.size());
		minus.reserve(r.pixels.size());
		for (std::size_t j = 0; j < mask.size(); ++j)
			(mask[j] ? plus : minus).push_back(r.pixels[j]);
		return { accumulate_stats(img, plus), accumulate_stats(img, minus) };
	}

	inline double channel_exact_indicator(RegionStats const& plus, RegionStats const& minus, int channel)
	{
		if (plus.pixel_count == 0 || minus.pixel_count == 0)
			throw ConfigError("exact indicator of a cut with an empty side");
		double const pp = static_cast<double>(plus.pixel_count);
		double const pm = static_cast<double>(minus.pixel_count);
		double const diff = region_mean(plus, channel) - region_mean(minus, channel);
		return pp * pm / (2.0 * (pp + pm)) * diff * diff;
	}

	inline double exact_indicator(RegionStats const& plus, RegionStats const& minus, ChannelSet channels)
	{
		double dj = 0.0;
		for (int k = 0; k < plus.channels; ++k)
			if (channels.contains(k))
				dj += channel_exact_indicator(plus, minus, k);
		return dj;
	}

	inline double first_order_indicator(ImageBuffer const& img, Partition const& partition, RegionId id,
		Cutting const& cut, int channel)
	{
		Region const& r = partition.region(id);
		auto const mask = partition.side_mask(id, cut, img);
		double const mean = region_mean(r.stats, channel);
		auto const plane = img.plane(channel);
		double lambda = 0.0;
		for (std::size_t j = 0; j < mask.size(); ++j)
		{
			double const g = mean - plane[r.pixels[j]];
			lambda += mask[j] ? g : -g;
		}
		return lambda;
	}

	// Exact indicator predicted from lambda: lambda^2 p / (8 p+ p-).
	inline double predicted_exact_indicator(double lambda, std::size_t p_plus, std::size_t p_minus)
	{
		double const pp = static_cast<double>(p_plus), pm = static_cast<double>(p_minus);
		return lambda * lambda * (pp + pm) / (8.0 * pp * pm);
	}

	struct IndicatorResult
	{
		double delta_j = 0.0;
		ChannelSet channels;
		std::array<double, MaxChannels> channel_delta_j{};
		std::array<double, MaxChannels> lambda{};
		std::size_t p_plus = 0;
		std::size_t p_minus = 0;
	};

	// Both indicators of one cut over the given channels.
	inline IndicatorResult evaluate_cut(ImageBuffer const& img, Partition const& partition, RegionId id,
		Cutting const& cut, ChannelSet channels)
	{
		auto const sides = side_stats(partition, id, cut, img);
		IndicatorResult res;
		res.channels = channels;
		res.p_plus = sides.plus.pixel_count;
		res.p_minus = sides.minus.pixel_count;
		for (int k = 0; k < img.channels(); ++k)
		{
			if (!channels.contains(k))
				continue;
			res.lambda[k] = first_order_indicator(img, partition, id, cut, k);
			res.channel_delta_j[k] = channel_exact_indicator(sides.plus, sides.minus, k);
			res.delta_j += res.channel_delta_j[k];
		}
		return res;
	}

	struct SignCutResult
	{
		SignCut cut;
		double lambda_star = 0.0; // sum over the region of |mean - d_i|
		bool valid = false;       // false when R- would be empty (channel constant on the region)
	};

	// The sign cut maximizes |lambda| over all 2-partitions of the region for this channel.
	inline SignCutResult optimal_sign_cut(ImageBuffer const& img, Partition const& partition, RegionId id, int channel)
	{
		Region const& r = partition.region(id);
		double const mean = region_mean(r.stats, channel);
		auto const plane = img.plane(channel);
		double lambda_star = 0.0;
		std::size_t plus = 0;
		for (auto i : r.pixels)
		{
			double const g = mean - plane[i];
			lambda_star += std::abs(g);
			plus += g >= 0.0 ? 1 : 0;
		}
		return { SignCut{ channel }, lambda_star, plus > 0 && plus < r.pixels.size() };
	}

	struct ChannelChoice
	{
		int channel = 0;
		bool all_constant = false;
	};

	// argmax of lambda_star over the channels in the set; ties go to the lower channel index.
	inline ChannelChoice best_channel(std::span<double const> lambda_star, ChannelSet channels)
	{
		ChannelChoice choice{ -1, true };
		double best = -1.0;
		for (int k = 0; k < static_cast<int>(lambda_star.size()); ++k)
		{
			if (!channels.contains(k))
				continue;
			if (lambda_star[k] > best)
			{
				best = lambda_star[k];
				choice.channel = k;
			}
		}
		if (choice.channel < 0)
			throw ConfigError("best_channel needs at least one channel");
		choice.all_constant = !(best > 0.0);
		return choice;
	}

	inline ChannelChoice best_channel(std::span<double const> lambda_star)
	{
		return best_channel(lambda_star, ChannelSet::first(static_cast<int>(lambda_star.size())));
	}
}
