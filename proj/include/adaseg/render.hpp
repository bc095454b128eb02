#pragma once

// Derived rasters and dumps of a labeling: boundary overlays, false-color
// label maps and row-major label files.

#include "adaseg/image.hpp"
#include "adaseg/partition.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace adaseg
{
	// Pixels whose right or lower neighbour carries another label.
	inline std::vector<bool> boundary_mask(std::span<RegionId const> labels, int width, int height)
	{
		std::vector<bool> edge(labels.size(), false);
		for (int y = 0; y < height; ++y)
			for (int x = 0; x < width; ++x)
			{
				std::size_t const i = static_cast<std::size_t>(y) * width + x;
				if ((x + 1 < width && labels[i + 1] != labels[i]) ||
					(y + 1 < height && labels[i + static_cast<std::size_t>(width)] != labels[i]))
					edge[i] = true;
			}
		return edge;
	}

	// Colors with region boundaries drawn in black.
	inline ColorPlanes edge_overlay(ColorPlanes colors, std::span<RegionId const> labels)
	{
		auto const edge = boundary_mask(labels, colors.width, colors.height);
		for (std::size_t i = 0; i < edge.size(); ++i)
			if (edge[i])
				for (int k = 0; k < colors.channels; ++k)
					colors.at(i, k) = 0.0;
		return colors;
	}

	// One pseudo-random RGB color per label.
	inline ColorPlanes label_colors(std::span<RegionId const> labels, int width, int height)
	{
		ColorPlanes out{ width, height, 3, std::vector<double>(labels.size() * 3) };
		for (std::size_t i = 0; i < labels.size(); ++i)
		{
			std::uint32_t h = labels[i] * 2654435761u + 0x9e3779b9u;
			h ^= h >> 15;
			h *= 0x2c1b3c6du;
			h ^= h >> 12;
			for (int k = 0; k < 3; ++k)
				out.at(i, k) = static_cast<double>((h >> (8 * k)) & 0xffu);
		}
		return out;
	}

	inline std::size_t distinct_labels(std::span<RegionId const> labels)
	{
		return std::unordered_set<RegionId>(labels.begin(), labels.end()).size();
	}

	// Binary label dump: "ASLB", then width, height, region count and one
	// label per pixel, all little-endian uint32, row-major.
	inline std::vector<std::uint8_t> encode_labels(std::span<RegionId const> labels, int width, int height)
	{
		std::vector<std::uint8_t> out{ 'A', 'S', 'L', 'B' };
		auto put = [&out](std::uint32_t v) {
			for (int b = 0; b < 4; ++b)
				out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
		};
		put(static_cast<std::uint32_t>(width));
		put(static_cast<std::uint32_t>(height));
		put(static_cast<std::uint32_t>(distinct_labels(labels)));
		for (auto l : labels)
			put(l);
		return out;
	}

	inline std::vector<RegionId> decode_labels(std::span<std::uint8_t const> bytes, int& width, int& height)
	{
		auto get = [&bytes](std::size_t at) {
			std::uint32_t v = 0;
			for (int b = 0; b < 4; ++b)
				v |= static_cast<std::uint32_t>(bytes[at + b]) << (8 * b);
			return v;
		};
		if (bytes.size() < 16 || bytes[0] != 'A' || bytes[1] != 'S' || bytes[2] != 'L' || bytes[3] != 'B')
			throw IoError("not a label dump");
		width = static_cast<int>(get(4));
		height = static_cast<int>(get(8));
		std::size_t const n = static_cast<std::size_t>(width) * height;
		if (bytes.size() != 16 + 4 * n)
			throw IoError("truncated label dump");
		std::vector<RegionId> labels(n);
		for (std::size_t i = 0; i < n; ++i)
			labels[i] = get(16 + 4 * i);
		return labels;
	}

	inline nlohmann::json labels_to_json(std::span<RegionId const> labels, int width, int height)
	{
		return { { "width", width }, { "height", height }, { "regions", distinct_labels(labels) },
			{ "labels", std::vector<RegionId>(labels.begin(), labels.end()) } };
	}
}
