#pragma once

// Pixel-to-region labelings with per-region sufficient statistics.

#include "adaseg/errors.hpp"
#include "adaseg/image.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace adaseg
{
	using RegionId = std::uint32_t;

	struct RegionStats
	{
		std::size_t pixel_count = 0;
		int channels = 0;
		std::array<double, MaxChannels> sum_d{};
		std::array<double, MaxChannels> sum_d2{};
		std::array<double, MaxChannels> min_d{};
		std::array<double, MaxChannels> max_d{};
		bool splittable = true;

		bool constant(int channel) const { return max_d[channel] - min_d[channel] == 0.0; }

		bool constant(ChannelSet set) const
		{
			for (int k = 0; k < channels; ++k)
				if (set.contains(k) && !constant(k))
					return false;
			return true;
		}

		void add(RegionStats const& other)
		{
			if (pixel_count == 0)
			{
				*this = other;
				return;
			}
			pixel_count += other.pixel_count;
			for (int k = 0; k < channels; ++k)
			{
				sum_d[k] += other.sum_d[k];
				sum_d2[k] += other.sum_d2[k];
				min_d[k] = std::min(min_d[k], other.min_d[k]);
				max_d[k] = std::max(max_d[k], other.max_d[k]);
			}
		}
	};

	inline double region_mean(RegionStats const& s, int channel)
	{
		return s.sum_d[channel] / static_cast<double>(s.pixel_count);
	}

	// Half the squared deviation of channel values from the channel mean.
	inline double channel_misfit(RegionStats const& s, int channel)
	{
		if (s.constant(channel))
			return 0.0;
		double const v = 0.5 * (s.sum_d2[channel] - s.sum_d[channel] * region_mean(s, channel));
		return std::max(v, 0.0);
	}

	inline double region_misfit(RegionStats const& s, ChannelSet set)
	{
		double j = 0.0;
		for (int k = 0; k < s.channels; ++k)
			if (set.contains(k))
				j += channel_misfit(s, k);
		return j;
	}

	inline double region_misfit(RegionStats const& s)
	{
		return region_misfit(s, ChannelSet::first(s.channels));
	}

	enum class Axis
	{
		Vertical,   // boundary between columns; R+ holds columns < position
		Horizontal, // boundary between rows; R+ holds rows < position
	};

	struct AxisCut
	{
		Axis axis = Axis::Vertical;
		int position = 0;
		friend bool operator==(AxisCut const&, AxisCut const&) = default;
	};

	// R+ = pixels with mean - d >= 0 in the given channel.
	struct SignCut
	{
		int channel = 0;
		friend bool operator==(SignCut const&, SignCut const&) = default;
	};

	// One flag per region pixel (in the region's pixel order); true = R+.
	struct ExplicitMask
	{
		std::vector<bool> plus;
		friend bool operator==(ExplicitMask const&, ExplicitMask const&) = default;
	};

	using Cutting = std::variant<AxisCut, SignCut, ExplicitMask>;

	struct BoundingBox
	{
		int x0 = 0, y0 = 0, x1 = 0, y1 = 0; // half-open
		int width() const { return x1 - x0; }
		int height() const { return y1 - y0; }
		friend bool operator==(BoundingBox const&, BoundingBox const&) = default;
	};

	struct Region
	{
		RegionStats stats;
		BoundingBox bbox;
		std::vector<std::uint32_t> pixels; // ascending flat indices
	};

	inline RegionStats accumulate_stats(ImageBuffer const& img, std::span<std::uint32_t const> pixels)
	{
		RegionStats s;
		s.channels = img.channels();
		s.pixel_count = pixels.size();
		for (int k = 0; k < img.channels(); ++k)
		{
			auto const plane = img.plane(k);
			double sum = 0.0, sum2 = 0.0;
			double lo = std::numeric_limits<double>::infinity(), hi = -lo;
			for (auto i : pixels)
			{
				double const d = plane[i];
				sum += d;
				sum2 += d * d;
				lo = std::min(lo, d);
				hi = std::max(hi, d);
			}
			s.sum_d[k] = sum;
			s.sum_d2[k] = sum2;
			s.min_d[k] = lo;
			s.max_d[k] = hi;
		}
		return s;
	}

	class Partition
	{
	public:
		Partition() = default;

		static Partition single_region(ImageBuffer const& img)
		{
			if (img.empty())
				throw ConfigError("empty image");
			return from_labels(img, std::vector<RegionId>(img.pixel_count(), 0));
		}

		// Regions are renumbered 0, 1, ... in order of first appearance.
		static Partition from_labels(ImageBuffer const& img, std::span<RegionId const> labels)
		{
			if (labels.size() != img.pixel_count())
				throw ConfigError("label array does not match the image");
			Partition p;
			p.width_ = img.width();
			p.height_ = img.height();
			p.labels_.resize(labels.size());
			std::unordered_map<RegionId, RegionId> remap;
			std::vector<std::vector<std::uint32_t>> members;
			for (std::size_t i = 0; i < labels.size(); ++i)
			{
				auto [it, inserted] = remap.try_emplace(labels[i], static_cast<RegionId>(members.size()));
				if (inserted)
					members.emplace_back();
				members[it->second].push_back(static_cast<std::uint32_t>(i));
				p.labels_[i] = it->second;
			}
			for (auto& m : members)
				p.add_region(img, std::move(m));
			return p;
		}

		int width() const { return width_; }
		int height() const { return height_; }
		std::size_t pixel_count() const { return labels_.size(); }
		std::size_t region_count() const { return live_; }
		RegionId next_id() const { return static_cast<RegionId>(regions_.size()); }

		bool contains(RegionId id) const { return id < regions_.size() && regions_[id].has_value(); }

		Region const& region(RegionId id) const
		{
			if (!contains(id))
				throw StateError("unknown region id " + std::to_string(id));
			return *regions_[id];
		}

		RegionStats const& stats(RegionId id) const { return region(id).stats; }

		void set_splittable(RegionId id, bool flag)
		{
			region(id);
			regions_[id]->stats.splittable = flag;
		}

		std::vector<RegionId> region_ids() const
		{
			std::vector<RegionId> ids;
			ids.reserve(live_);
			for (RegionId id = 0; id < regions_.size(); ++id)
				if (regions_[id])
					ids.push_back(id);
			return ids;
		}

		std::span<RegionId const> labels() const { return labels_; }
		RegionId label(std::size_t pixel) const { return labels_[pixel]; }

		// Side of each region pixel under the cut, in the region's pixel order (true = R+).
		std::vector<bool> side_mask(RegionId id, Cutting const& cut, ImageBuffer const& img) const
		{
			Region const& r = region(id);
			std::vector<bool> plus(r.pixels.size());
			std::visit(
				[&](auto const& c) {
					using T = std::decay_t<decltype(c)>;
					if constexpr (std::is_same_v<T, AxisCut>)
					{
						for (std::size_t j = 0; j < r.pixels.size(); ++j)
						{
							int const coord = c.axis == Axis::Vertical ? static_cast<int>(r.pixels[j] % width_)
																	   : static_cast<int>(r.pixels[j] / width_);
							plus[j] = coord < c.position;
						}
					}
					else if constexpr (std::is_same_v<T, SignCut>)
					{
						if (c.channel < 0 || c.channel >= img.channels())
							throw ConfigError("sign cut channel out of range");
						double const mean = region_mean(r.stats, c.channel);
						auto const plane = img.plane(c.channel);
						for (std::size_t j = 0; j < r.pixels.size(); ++j)
							plus[j] = mean - plane[r.pixels[j]] >= 0.0;
					}
					else
					{
						if (c.plus.size() != r.pixels.size())
							throw ConfigError("explicit mask size does not match the region");
						plus = c.plus;
					}
				},
				cut);
			return plus;
		}

		// Retires the region; R+ receives the smaller of the two fresh ids.
		std::pair<RegionId, RegionId> split(RegionId id, Cutting const& cut, ImageBuffer const& img)
		{
			auto const plus = side_mask(id, cut, img);
			std::vector<std::uint8_t> cells(plus.size());
			for (std::size_t j = 0; j < plus.size(); ++j)
				cells[j] = plus[j] ? 0 : 1;
			auto const ids = split_cells(id, cells, img);
			if (ids.size() != 2)
				throw StateError("cut leaves one side of region " + std::to_string(id) + " empty");
			return { ids[0], ids[1] };
		}

		// Splits a region into the non-empty cells given by one code per region pixel.
		// Children receive fresh ids in ascending code order; at least two cells must be non-empty.
		std::vector<RegionId> split_cells(RegionId id, std::span<std::uint8_t const> cell_of, ImageBuffer const& img)
		{
			Region const& r = region(id);
			if (cell_of.size() != r.pixels.size())
				throw ConfigError("cell codes do not match the region");
			std::array<std::vector<std::uint32_t>, 256> groups;
			int non_empty = 0;
			for (std::size_t j = 0; j < r.pixels.size(); ++j)
			{
				auto& g = groups[cell_of[j]];
				non_empty += g.empty() ? 1 : 0;
				g.push_back(r.pixels[j]);
			}
			if (non_empty < 2)
				throw StateError("cut leaves one side of region " + std::to_string(id) + " empty");

			regions_[id].reset();
			--live_;
			std::vector<RegionId> children;
			for (auto& g : groups)
			{
				if (g.empty())
					continue;
				RegionId const child = next_id();
				for (auto i : g)
					labels_[i] = child;
				add_region(img, std::move(g));
				children.push_back(child);
			}
			return children;
		}

	private:
		void add_region(ImageBuffer const& img, std::vector<std::uint32_t> pixels)
		{
			Region r;
			r.stats = accumulate_stats(img, pixels);
			r.bbox = { width_, height_, 0, 0 };
			for (auto i : pixels)
			{
				int const x = static_cast<int>(i % width_), y = static_cast<int>(i / width_);
				r.bbox.x0 = std::min(r.bbox.x0, x);
				r.bbox.y0 = std::min(r.bbox.y0, y);
				r.bbox.x1 = std::max(r.bbox.x1, x + 1);
				r.bbox.y1 = std::max(r.bbox.y1, y + 1);
			}
			r.pixels = std::move(pixels);
			regions_.emplace_back(std::move(r));
			++live_;
		}

		int width_ = 0;
		int height_ = 0;
		std::vector<RegionId> labels_;
		std::vector<std::optional<Region>> regions_;
		std::size_t live_ = 0;
	};

	// Common refinement: regions are the non-empty intersections of regions of a and b.
	inline Partition superimpose(Partition const& a, Partition const& b, ImageBuffer const& img)
	{
		if (a.pixel_count() != b.pixel_count() || a.width() != b.width())
			throw ConfigError("superimposed partitions must share the pixel grid");
		std::unordered_map<std::uint64_t, RegionId> cells;
		std::vector<RegionId> labels(a.pixel_count());
		for (std::size_t i = 0; i < labels.size(); ++i)
		{
			std::uint64_t const key = (static_cast<std::uint64_t>(a.label(i)) << 32) | b.label(i);
			labels[i] = cells.try_emplace(key, static_cast<RegionId>(cells.size())).first->second;
		}
		return Partition::from_labels(img, labels);
	}

	// Every pixel takes its region's per-channel mean.
	inline ColorPlanes paint(Partition const& p, ImageBuffer const& img)
	{
		if (p.pixel_count() != img.pixel_count())
			throw ConfigError("partition does not match the image");
		ColorPlanes out{ img.width(), img.height(), img.channels(), std::vector<double>(img.data().size()) };
		for (RegionId id : p.region_ids())
		{
			Region const& r = p.region(id);
			for (int k = 0; k < img.channels(); ++k)
			{
				double const m = region_mean(r.stats, k);
				for (auto i : r.pixels)
					out.at(i, k) = m;
			}
		}
		return out;
	}

	// Channel k takes its means from partitions[k].
	inline ColorPlanes paint_channels(std::span<Partition const> partitions, ImageBuffer const& img)
	{
		if (static_cast<int>(partitions.size()) != img.channels())
			throw ConfigError("one partition per channel required");
		ColorPlanes out{ img.width(), img.height(), img.channels(), std::vector<double>(img.data().size()) };
		for (int k = 0; k < img.channels(); ++k)
			for (RegionId id : partitions[k].region_ids())
			{
				Region const& r = partitions[k].region(id);
				double const m = region_mean(r.stats, k);
				for (auto i : r.pixels)
					out.at(i, k) = m;
			}
		return out;
	}
}
