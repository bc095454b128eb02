#pragma once

#include "adaseg/errors.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace adaseg
{
	inline constexpr int MaxChannels = 3;

	// Set of channel indices, stored as a bit mask (bit k = channel k).
	class ChannelSet
	{
	public:
		constexpr ChannelSet() = default;

		static constexpr ChannelSet single(int channel) { return ChannelSet(1u << channel); }
		static constexpr ChannelSet first(int count) { return ChannelSet((1u << count) - 1u); }

		constexpr ChannelSet with(int channel) const { return ChannelSet(bits_ | (1u << channel)); }

		constexpr bool contains(int channel) const { return (bits_ >> channel) & 1u; }
		constexpr bool empty() const { return bits_ == 0; }
		constexpr unsigned bits() const { return bits_; }

		constexpr int size() const
		{
			int n = 0;
			for (int k = 0; k < MaxChannels; ++k)
				n += contains(k) ? 1 : 0;
			return n;
		}

		friend constexpr bool operator==(ChannelSet, ChannelSet) = default;

	private:
		constexpr explicit ChannelSet(unsigned bits) : bits_(bits) {}
		unsigned bits_ = 0;
	};

	// Fixed-size pixel grid with 1 or 3 real-valued channel planes in [0, 255].
	// Pixel i (flat, row-major) sits at column i % width, row i / width.
	class ImageBuffer
	{
	public:
		ImageBuffer() = default;

		ImageBuffer(int width, int height, int channels, std::vector<double> data)
			: width_(width), height_(height), channels_(channels), data_(std::move(data))
		{
			if (width <= 0 || height <= 0)
				throw ConfigError("image dimensions must be positive");
			if (channels != 1 && channels != 3)
				throw ConfigError("channel count must be 1 or 3");
			if (data_.size() != static_cast<std::size_t>(width) * height * channels)
				throw ConfigError("plane data does not match image dimensions");
			for (double v : data_)
				if (!(v >= 0.0 && v <= 255.0))
					throw ConfigError("pixel values must lie in [0, 255]");
		}

		// Planes given one per channel, each of width*height values.
		static ImageBuffer from_planes(int width, int height, std::vector<std::vector<double>> const& planes)
		{
			std::vector<double> data;
			for (auto const& p : planes)
			{
				if (p.size() != static_cast<std::size_t>(width) * height)
					throw ConfigError("plane size does not match image dimensions");
				data.insert(data.end(), p.begin(), p.end());
			}
			return ImageBuffer(width, height, static_cast<int>(planes.size()), std::move(data));
		}

		int width() const { return width_; }
		int height() const { return height_; }
		int channels() const { return channels_; }
		std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
		bool empty() const { return data_.empty(); }
		int source_depth() const { return 8; }
		ChannelSet all_channels() const { return ChannelSet::first(channels_); }

		std::span<double const> plane(int channel) const
		{
			return { data_.data() + channel * pixel_count(), pixel_count() };
		}

		double at(std::size_t pixel, int channel) const { return data_[channel * pixel_count() + pixel]; }

		std::vector<double> const& data() const { return data_; }

		friend bool operator==(ImageBuffer const&, ImageBuffer const&) = default;

	private:
		int width_ = 0;
		int height_ = 0;
		int channels_ = 0;
		std::vector<double> data_;
	};

	// Per-pixel real colors with the same layout as an ImageBuffer (plane-major).
	struct ColorPlanes
	{
		int width = 0;
		int height = 0;
		int channels = 0;
		std::vector<double> data;

		std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
		double& at(std::size_t pixel, int channel) { return data[channel * pixel_count() + pixel]; }
		double at(std::size_t pixel, int channel) const { return data[channel * pixel_count() + pixel]; }
	};

	inline ColorPlanes colors_of(ImageBuffer const& img)
	{
		return { img.width(), img.height(), img.channels(), img.data() };
	}

	inline char channel_letter(int channels, int k)
	{
		if (channels == 1)
			return 'L';
		return "RGB"[k];
	}

	inline std::string channel_label(int channels, ChannelSet set)
	{
		std::string s;
		for (int k = 0; k < channels; ++k)
			if (set.contains(k))
				s += channel_letter(channels, k);
		return s;
	}

	// FNV-1a over dimensions and plane values; identifies an image in session files.
	inline std::string image_hash(ImageBuffer const& img)
	{
		std::uint64_t h = 1469598103934665603ull;
		auto mix = [&h](std::uint64_t v) {
			for (int b = 0; b < 8; ++b)
			{
				h ^= (v >> (8 * b)) & 0xffu;
				h *= 1099511628211ull;
			}
		};
		mix(static_cast<std::uint64_t>(img.width()));
		mix(static_cast<std::uint64_t>(img.height()));
		mix(static_cast<std::uint64_t>(img.channels()));
		for (double v : img.data())
			mix(static_cast<std::uint64_t>(std::llround(v * 1024.0)));
		static char const* digits = "0123456789abcdef";
		std::string out(16, '0');
		for (int i = 15; i >= 0; --i, h >>= 4)
			out[i] = digits[h & 0xf];
		return out;
	}
}
