#pragma once

// Raster I/O: 8-bit PNG (via libpng), binary PPM (P6) and PGM (P5).

#include "adaseg/errors.hpp"
#include "adaseg/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace adaseg
{
	// Nearest integer with ties away from zero, clamped to [0, 255].
	inline std::uint8_t quantize(double v)
	{
		if (!(v > 0.0))
			return 0;
		double const r = std::round(v);
		return r >= 255.0 ? std::uint8_t{ 255 } : static_cast<std::uint8_t>(r);
	}

	namespace detail
	{
		inline std::vector<std::uint8_t> read_file(std::filesystem::path const& path)
		{
			std::ifstream in(path, std::ios::binary);
			if (!in)
				throw IoError("cannot open " + path.string());
			std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
			if (in.bad())
				throw IoError("cannot read " + path.string());
			return bytes;
		}

		inline void write_file(std::filesystem::path const& path, std::vector<std::uint8_t> const& bytes)
		{
			std::ofstream out(path, std::ios::binary | std::ios::trunc);
			if (!out)
				throw IoError("cannot write " + path.string());
			out.write(reinterpret_cast<char const*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
			if (!out)
				throw IoError("cannot write " + path.string());
		}

		inline ImageBuffer from_interleaved(int width, int height, int channels, std::uint8_t const* px)
		{
			std::size_t const n = static_cast<std::size_t>(width) * height;
			std::vector<double> data(n * channels);
			for (std::size_t i = 0; i < n; ++i)
				for (int k = 0; k < channels; ++k)
					data[k * n + i] = px[i * channels + k];
			return ImageBuffer(width, height, channels, std::move(data));
		}

		inline ImageBuffer decode_png(std::vector<std::uint8_t> const& bytes)
		{
			// IHDR is always the first chunk: width, height, bit depth, colour type.
			if (bytes.size() < 33)
				throw IoError("truncated PNG");
			int const bit_depth = bytes[24];
			int const color_type = bytes[25];
			if (bit_depth > 8)
				throw IoError("unsupported PNG bit depth " + std::to_string(bit_depth));

			png_image image;
			std::memset(&image, 0, sizeof image);
			image.version = PNG_IMAGE_VERSION;
			if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
				throw IoError(std::string("PNG decode failed: ") + image.message);
			if (image.width == 0 || image.height == 0)
			{
				png_image_free(&image);
				throw IoError("zero-dimension image");
			}
			bool const gray = (color_type & PNG_COLOR_MASK_COLOR) == 0;
			image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
			std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
			if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr))
			{
				std::string msg = image.message;
				png_image_free(&image);
				throw IoError("PNG decode failed: " + msg);
			}
			return from_interleaved(static_cast<int>(image.width), static_cast<int>(image.height), gray ? 1 : 3, px.data());
		}

		inline ImageBuffer decode_pnm(std::vector<std::uint8_t> const& bytes)
		{
			std::size_t pos = 2;
			auto next_int = [&]() -> long {
				for (;;)
				{
					while (pos < bytes.size() && std::isspace(bytes[pos]))
						++pos;
					if (pos < bytes.size() && bytes[pos] == '#')
					{
						while (pos < bytes.size() && bytes[pos] != '\n')
							++pos;
						continue;
					}
					break;
				}
				if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
					throw IoError("malformed PNM header");
				long v = 0;
				while (pos < bytes.size() && std::isdigit(bytes[pos]))
				{
					v = v * 10 + (bytes[pos++] - '0');
					if (v > (1L << 30))
						throw IoError("malformed PNM header");
				}
				return v;
			};
			int const channels = bytes[1] == '6' ? 3 : 1;
			long const w = next_int();
			long const h = next_int();
			long const maxval = next_int();
			if (w == 0 || h == 0)
				throw IoError("zero-dimension image");
			if (maxval <= 0 || maxval > 255)
				throw IoError("unsupported PNM bit depth (maxval " + std::to_string(maxval) + ")");
			++pos; // single whitespace before the raster
			std::size_t const need = static_cast<std::size_t>(w) * h * channels;
			if (bytes.size() < pos + need)
				throw IoError("truncated PNM raster");
			return from_interleaved(static_cast<int>(w), static_cast<int>(h), channels, bytes.data() + pos);
		}
	}

	inline ImageBuffer decode_image(std::vector<std::uint8_t> const& bytes)
	{
		static constexpr std::uint8_t png_sig[8] = { 0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n' };
		if (bytes.size() >= 8 && std::equal(png_sig, png_sig + 8, bytes.begin()))
			return detail::decode_png(bytes);
		if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
			return detail::decode_pnm(bytes);
		throw IoError("unrecognized image format (expected PNG, P5 or P6)");
	}

	inline ImageBuffer load_image(std::filesystem::path const& path)
	{
		return decode_image(detail::read_file(path));
	}

	// 8-bit PNG of the given colors: RGB for 3 channels, grayscale for 1.
	inline std::vector<std::uint8_t> encode_png(ColorPlanes const& colors)
	{
		std::size_t const n = colors.pixel_count();
		std::vector<std::uint8_t> px(n * colors.channels);
		for (std::size_t i = 0; i < n; ++i)
			for (int k = 0; k < colors.channels; ++k)
				px[i * colors.channels + k] = quantize(colors.at(i, k));

		png_image image;
		std::memset(&image, 0, sizeof image);
		image.version = PNG_IMAGE_VERSION;
		image.width = static_cast<png_uint_32>(colors.width);
		image.height = static_cast<png_uint_32>(colors.height);
		image.format = colors.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;

		png_alloc_size_t size = 0;
		if (!png_image_write_to_memory(&image, nullptr, &size, 0, px.data(), 0, nullptr))
			throw IoError(std::string("PNG encode failed: ") + image.message);
		std::vector<std::uint8_t> out(size);
		if (!png_image_write_to_memory(&image, out.data(), &size, 0, px.data(), 0, nullptr))
			throw IoError(std::string("PNG encode failed: ") + image.message);
		out.resize(size);
		return out;
	}

	// Binary PPM (3 channels) or PGM (1 channel).
	inline std::vector<std::uint8_t> encode_pnm(ColorPlanes const& colors)
	{
		std::string header = (colors.channels == 3 ? "P6\n" : "P5\n") + std::to_string(colors.width) + " " +
			std::to_string(colors.height) + "\n255\n";
		std::vector<std::uint8_t> out(header.begin(), header.end());
		std::size_t const n = colors.pixel_count();
		for (std::size_t i = 0; i < n; ++i)
			for (int k = 0; k < colors.channels; ++k)
				out.push_back(quantize(colors.at(i, k)));
		return out;
	}

	inline void save_image(ImageBuffer const& img, ColorPlanes const& colors, std::filesystem::path const& path)
	{
		if (colors.width != img.width() || colors.height != img.height() || colors.channels != img.channels() ||
			colors.data.size() != img.data().size())
			throw ConfigError("colors do not match the image dimensions");
		detail::write_file(path, encode_png(colors));
	}

	inline void save_image(ImageBuffer const& img, std::filesystem::path const& path)
	{
		save_image(img, colors_of(img), path);
	}
}
