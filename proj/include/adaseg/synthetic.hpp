#pragma once

// Flat-colored synthetic test images: three shapes on a background, optionally
// with a small square inclusion inside each shape.

#include "adaseg/errors.hpp"
#include "adaseg/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

namespace adaseg
{
	using Rgb = std::array<double, 3>;

	// Background, rectangle, disc, triangle.
	inline std::array<Rgb, 4> default_simple_colors()
	{
		return { { { 255, 192, 203 }, { 0, 160, 60 }, { 250, 220, 30 }, { 40, 70, 220 } } };
	}

	// Inclusions inside the rectangle, disc and triangle.
	inline std::array<Rgb, 3> default_inclusion_colors()
	{
		return { { { 90, 200, 110 }, { 200, 150, 20 }, { 100, 130, 250 } } };
	}

	struct ShapeLayout
	{
		// Rectangle [x0, x1) x [y0, y1).
		int rect_x0, rect_y0, rect_x1, rect_y1;
		double disc_cx, disc_cy, disc_r;
		// Triangle: apex on top, horizontal base.
		double tri_apex_x, tri_apex_y, tri_base_y, tri_base_x0, tri_base_x1;

		bool in_rect(int x, int y) const { return x >= rect_x0 && x < rect_x1 && y >= rect_y0 && y < rect_y1; }

		bool in_disc(int x, int y) const
		{
			double const dx = x + 0.5 - disc_cx, dy = y + 0.5 - disc_cy;
			return dx * dx + dy * dy <= disc_r * disc_r;
		}

		bool in_triangle(int x, int y) const
		{
			double const px = x + 0.5, py = y + 0.5;
			if (py < tri_apex_y || py > tri_base_y)
				return false;
			double const t = (py - tri_apex_y) / (tri_base_y - tri_apex_y);
			double const left = tri_apex_x + t * (tri_base_x0 - tri_apex_x);
			double const right = tri_apex_x + t * (tri_base_x1 - tri_apex_x);
			return px >= left && px <= right;
		}
	};

	inline ShapeLayout shape_layout(int size, std::uint64_t seed)
	{
		double const s = size;
		std::array<double, 6> jitter{};
		if (seed != 0)
		{
			std::mt19937_64 rng(seed);
			std::uniform_real_distribution<double> u(-0.03, 0.03);
			for (auto& j : jitter)
				j = u(rng) * s;
		}
		ShapeLayout l{};
		l.rect_x0 = static_cast<int>(std::lround(0.08 * s + jitter[0]));
		l.rect_y0 = static_cast<int>(std::lround(0.10 * s + jitter[1]));
		l.rect_x1 = static_cast<int>(std::lround(0.42 * s + jitter[0]));
		l.rect_y1 = static_cast<int>(std::lround(0.45 * s + jitter[1]));
		l.disc_cx = 0.72 * s + jitter[2];
		l.disc_cy = 0.28 * s + jitter[3];
		l.disc_r = 0.17 * s;
		l.tri_apex_x = 0.50 * s + jitter[4];
		l.tri_apex_y = 0.55 * s + jitter[5];
		l.tri_base_y = 0.93 * s + jitter[5];
		l.tri_base_x0 = 0.18 * s + jitter[4];
		l.tri_base_x1 = 0.82 * s + jitter[4];
		return l;
	}

	namespace detail
	{
		inline void check_distinct(std::vector<Rgb> const& colors)
		{
			std::set<Rgb> seen(colors.begin(), colors.end());
			if (seen.size() != colors.size())
				throw ConfigError("synthetic image colors must be distinct");
			for (auto const& c : colors)
				for (double v : c)
					if (!(v >= 0.0 && v <= 255.0))
						throw ConfigError("synthetic image colors must lie in [0, 255]");
		}

		// Shape index per pixel: 0 background, 1 rectangle, 2 disc, 3 triangle.
		inline std::vector<std::uint8_t> rasterize(ShapeLayout const& l, int size)
		{
			std::vector<std::uint8_t> shape(static_cast<std::size_t>(size) * size, 0);
			for (int y = 0; y < size; ++y)
				for (int x = 0; x < size; ++x)
				{
					int const hits = (l.in_rect(x, y) ? 1 : 0) + (l.in_disc(x, y) ? 1 : 0) + (l.in_triangle(x, y) ? 1 : 0);
					if (hits > 1)
						throw ConfigError("synthetic shapes overlap");
					std::uint8_t& s = shape[static_cast<std::size_t>(y) * size + x];
					s = l.in_rect(x, y) ? 1 : l.in_disc(x, y) ? 2 : l.in_triangle(x, y) ? 3 : 0;
				}
			return shape;
		}

		inline ImageBuffer paint_classes(std::vector<std::uint8_t> const& cls, std::vector<Rgb> const& colors, int size)
		{
			std::size_t const n = cls.size();
			std::vector<double> data(3 * n);
			for (std::size_t i = 0; i < n; ++i)
				for (int k = 0; k < 3; ++k)
					data[k * n + i] = colors[cls[i]][k];
			return ImageBuffer(size, size, 3, std::move(data));
		}
	}

	// Pixel classes of the perturbed image: 0-3 as the simple image, 4-6 the inclusions
	// of rectangle, disc and triangle.
	inline std::vector<std::uint8_t> perturbed_classes(int size, std::uint64_t seed = 0)
	{
		if (size < 32)
			throw ConfigError("synthetic images need size >= 32");
		auto const layout = shape_layout(size, seed);
		auto cls = detail::rasterize(layout, size);
		int const side = std::max(2, static_cast<int>(std::lround(0.06 * size)));
		std::array<std::array<double, 2>, 3> const centers = { {
			{ (layout.rect_x0 + layout.rect_x1) / 2.0, (layout.rect_y0 + layout.rect_y1) / 2.0 },
			{ layout.disc_cx, layout.disc_cy },
			{ layout.tri_apex_x, layout.tri_apex_y + 0.65 * (layout.tri_base_y - layout.tri_apex_y) },
		} };
		for (int s = 0; s < 3; ++s)
		{
			int const x0 = static_cast<int>(std::lround(centers[s][0] - side / 2.0));
			int const y0 = static_cast<int>(std::lround(centers[s][1] - side / 2.0));
			for (int y = y0; y < y0 + side; ++y)
				for (int x = x0; x < x0 + side; ++x)
				{
					if (x < 0 || y < 0 || x >= size || y >= size)
						throw ConfigError("inclusion outside its shape");
					auto& c = cls[static_cast<std::size_t>(y) * size + x];
					if (c != s + 1)
						throw ConfigError("inclusion outside its shape");
					c = static_cast<std::uint8_t>(4 + s);
				}
		}
		return cls;
	}

	inline ImageBuffer generate_simple(int size, std::array<Rgb, 4> const& colors = default_simple_colors(),
		std::uint64_t seed = 0)
	{
		if (size < 32)
			throw ConfigError("synthetic images need size >= 32");
		std::vector<Rgb> const palette(colors.begin(), colors.end());
		detail::check_distinct(palette);
		return detail::paint_classes(detail::rasterize(shape_layout(size, seed), size), palette, size);
	}

	inline ImageBuffer generate_perturbed(int size, std::array<Rgb, 4> const& colors = default_simple_colors(),
		std::array<Rgb, 3> const& inclusions = default_inclusion_colors(), std::uint64_t seed = 0)
	{
		std::vector<Rgb> palette(colors.begin(), colors.end());
		palette.insert(palette.end(), inclusions.begin(), inclusions.end());
		detail::check_distinct(palette);
		return detail::paint_classes(perturbed_classes(size, seed), palette, size);
	}
}
