#pragma once

// Session-oriented HTTP service: create a segmentation from an uploaded image,
// then step, undo, render and inspect it. JSON bodies, PNG renders.

#include "adaseg/engine.hpp"
#include "adaseg/errors.hpp"
#include "adaseg/image_io.hpp"
#include "adaseg/render.hpp"
#include "adaseg/trace.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

namespace adaseg
{
	struct ServiceOptions
	{
		std::size_t max_upload_bytes = 32u << 20;
		std::size_t max_pixels = 4096u * 4096u;
		std::chrono::seconds idle_ttl{ 3600 };
	};

	struct HttpReply
	{
		int status = 200;
		std::string body;
		std::string content_type = "application/json";
	};

	struct SessionRequest
	{
		std::string image_bytes;
		std::string mode = "vector";
		std::string cutting = "overall-best";
		std::string multiscalar = "best-component-only";
	};

	class SessionService
	{
	public:
		using Clock = std::chrono::steady_clock;

		explicit SessionService(ServiceOptions options = {}) : options_(options), rng_(std::random_device{}()) {}

		std::size_t session_count() const
		{
			std::lock_guard lock(registry_mutex_);
			return sessions_.size();
		}

		HttpReply create(SessionRequest const& req)
		{
			evict_idle();
			if (req.image_bytes.size() > options_.max_upload_bytes)
				return error(413, "image upload exceeds " + std::to_string(options_.max_upload_bytes) + " bytes");
			EngineConfig config;
			std::shared_ptr<ImageBuffer const> image;
			try
			{
				config.mode = parse_mode(req.mode);
				config.cutting = parse_cutting_strategy(req.cutting);
				config.multiscalar = parse_multiscalar_strategy(req.multiscalar);
				image = std::make_shared<ImageBuffer const>(decode_image(
					std::vector<std::uint8_t>(req.image_bytes.begin(), req.image_bytes.end())));
			}
			catch (std::exception const& e)
			{
				return error(400, e.what());
			}
			if (image->pixel_count() > options_.max_pixels)
				return error(413, "image exceeds " + std::to_string(options_.max_pixels) + " pixels");

			auto session = std::make_shared<Session>();
			session->initial = config;
			session->state = std::make_unique<SegmentationState>(image, config);
			session->created = session->touched = Clock::now();
			{
				std::lock_guard lock(registry_mutex_);
				do
					session->id = new_id();
				while (sessions_.count(session->id));
				sessions_[session->id] = session;
			}
			nlohmann::json body = stats(*session);
			return { 201, body.dump() };
		}

		HttpReply state(std::string const& id)
		{
			auto s = find(id);
			if (!s)
				return not_found(id);
			std::shared_lock lock(s->mutex);
			return { 200, stats(*s).dump() };
		}

		// Commits up to `count` iterations; 409 when the run ends early.
		HttpReply step(std::string const& id, nlohmann::json const& body)
		{
			auto s = find(id);
			if (!s)
				return not_found(id);
			long const count = body.value("count", 1L);
			if (count < 1)
				return error(400, "count must be >= 1");
			std::unique_lock lock(s->mutex);
			auto& st = *s->state;
			try
			{
				auto cutting = st.config().cutting;
				auto multiscalar = st.config().multiscalar;
				if (body.contains("cutting"))
					cutting = parse_cutting_strategy(body["cutting"].get<std::string>());
				if (body.contains("multiscalar"))
					multiscalar = parse_multiscalar_strategy(body["multiscalar"].get<std::string>());
				st.set_strategies(cutting, multiscalar);
			}
			catch (ConfigError const& e)
			{
				return error(400, e.what());
			}
			catch (StateError const& e)
			{
				return error(409, e.what());
			}
			catch (nlohmann::json::exception const& e)
			{
				return error(400, e.what());
			}

			nlohmann::json events = nlohmann::json::array();
			long done = 0;
			for (; done < count; ++done)
			{
				auto const ev = st.step();
				if (ev.empty())
					break;
				for (auto const& e : ev)
					events.push_back(event_to_json(e, st.image().channels()));
			}
			nlohmann::json out = stats(*s);
			out["events"] = events;
			out["steps_done"] = done;
			return { done == count ? 200 : 409, out.dump() };
		}

		HttpReply undo(std::string const& id, nlohmann::json const& body)
		{
			auto s = find(id);
			if (!s)
				return not_found(id);
			long const count = body.value("count", 1L);
			if (count < 1)
				return error(400, "count must be >= 1");
			std::unique_lock lock(s->mutex);
			long done = 0;
			for (; done < count && s->state->iteration() > 0; ++done)
				s->state->undo();
			nlohmann::json out = stats(*s);
			out["undone"] = done;
			return { done == count ? 200 : 409, out.dump() };
		}

		HttpReply render(std::string const& id, std::string const& layer)
		{
			auto s = find(id);
			if (!s)
				return not_found(id);
			std::shared_lock lock(s->mutex);
			auto const& st = *s->state;
			ColorPlanes colors;
			if (layer == "segmented" || layer.empty())
				colors = st.segmented();
			else if (layer == "edges")
			{
				auto const labels = st.vector_labels();
				colors = edge_overlay(st.segmented(), labels);
			}
			else if (layer == "original")
				colors = colors_of(st.image());
			else
				return error(400, "unknown layer '" + layer + "'");
			auto const png = encode_png(colors);
			return { 200, std::string(png.begin(), png.end()), "image/png" };
		}

		HttpReply inspect(std::string const& id, long x, long y)
		{
			auto s = find(id);
			if (!s)
				return not_found(id);
			std::shared_lock lock(s->mutex);
			auto const& st = *s->state;
			auto const& img = st.image();
			if (x < 0 || y < 0 || x >= img.width() || y >= img.height())
				return error(400, "pixel out of bounds");
			std::size_t const pixel = static_cast<std::size_t>(y) * img.width() + static_cast<std::size_t>(x);
			nlohmann::json regions = nlohmann::json::array();
			for (std::size_t p = 0; p < st.partitions().size(); ++p)
			{
				auto const& part = st.partitions()[p];
				RegionId const id_at = part.label(pixel);
				auto const& stats = part.stats(id_at);
				std::vector<double> mean;
				for (int k = 0; k < img.channels(); ++k)
					mean.push_back(region_mean(stats, k));
				auto const& cand = st.candidate(p, id_at);
				regions.push_back({
					{ "channel", channel_label(img.channels(), st.scored_channels(p)) },
					{ "region", id_at },
					{ "pixel_count", stats.pixel_count },
					{ "mean", mean },
					{ "best_delta_j", cand.delta_j },
					{ "splittable", cand.splittable },
				});
			}
			auto const colors = st.segmented();
			std::vector<double> color;
			for (int k = 0; k < img.channels(); ++k)
				color.push_back(colors.at(pixel, k));
			nlohmann::json out = { { "x", x }, { "y", y }, { "regions", regions }, { "color", color } };
			return { 200, out.dump() };
		}

		HttpReply trace(std::string const& id, std::string const& format)
		{
			auto s = find(id);
			if (!s)
				return not_found(id);
			std::shared_lock lock(s->mutex);
			auto const& st = *s->state;
			if (format == "csv" || format.empty())
				return { 200, trace_csv(st), "text/csv" };
			if (format == "json")
				return { 200, session_to_json(st, s->initial).dump() };
			return error(400, "unknown trace format '" + format + "'");
		}

		HttpReply remove(std::string const& id)
		{
			std::lock_guard lock(registry_mutex_);
			if (!sessions_.erase(id))
				return not_found(id);
			return { 200, nlohmann::json{ { "deleted", id } }.dump() };
		}

		// Drops sessions untouched for longer than the idle TTL.
		std::size_t evict_idle()
		{
			auto const now = Clock::now();
			std::lock_guard lock(registry_mutex_);
			return std::erase_if(sessions_, [&](auto const& kv) {
				std::lock_guard touch(kv.second->touch_mutex);
				return now - kv.second->touched > options_.idle_ttl;
			});
		}

		void mount(httplib::Server& server)
		{
			server.set_payload_max_length(options_.max_upload_bytes + (1u << 20));
			auto reply = [](httplib::Response& res, HttpReply const& r) {
				res.status = r.status;
				res.set_content(r.body, r.content_type);
			};
			server.Post("/sessions", [this, reply](httplib::Request const& req, httplib::Response& res) {
				SessionRequest sr;
				auto field = [&](char const* key, std::string& out) {
					if (req.has_file(key))
						out = req.get_file_value(key).content;
					else if (req.has_param(key))
						out = req.get_param_value(key);
				};
				if (req.has_file("image"))
					sr.image_bytes = req.get_file_value("image").content;
				else
					sr.image_bytes = req.body;
				field("mode", sr.mode);
				field("cutting", sr.cutting);
				field("multiscalar", sr.multiscalar);
				reply(res, create(sr));
			});
			auto json_body = [](httplib::Request const& req) {
				if (req.body.empty())
					return nlohmann::json::object();
				return nlohmann::json::parse(req.body);
			};
			server.Post(R"(/sessions/([0-9a-f]+)/step)",
				[this, reply, json_body](httplib::Request const& req, httplib::Response& res) {
					try
					{
						reply(res, step(req.matches[1], json_body(req)));
					}
					catch (nlohmann::json::exception const& e)
					{
						reply(res, error(400, e.what()));
					}
				});
			server.Post(R"(/sessions/([0-9a-f]+)/undo)",
				[this, reply, json_body](httplib::Request const& req, httplib::Response& res) {
					try
					{
						reply(res, undo(req.matches[1], json_body(req)));
					}
					catch (nlohmann::json::exception const& e)
					{
						reply(res, error(400, e.what()));
					}
				});
			server.Get(R"(/sessions/([0-9a-f]+)/state)", [this, reply](httplib::Request const& req, httplib::Response& res) {
				reply(res, state(req.matches[1]));
			});
			server.Get(R"(/sessions/([0-9a-f]+)/render)", [this, reply](httplib::Request const& req, httplib::Response& res) {
				reply(res, render(req.matches[1], req.get_param_value("layer")));
			});
			server.Get(R"(/sessions/([0-9a-f]+)/inspect)",
				[this, reply](httplib::Request const& req, httplib::Response& res) {
					long x = 0, y = 0;
					try
					{
						x = std::stol(req.get_param_value("x"));
						y = std::stol(req.get_param_value("y"));
					}
					catch (std::exception const&)
					{
						return reply(res, error(400, "x and y must be integers"));
					}
					reply(res, inspect(req.matches[1], x, y));
				});
			server.Get(R"(/sessions/([0-9a-f]+)/trace)", [this, reply](httplib::Request const& req, httplib::Response& res) {
				reply(res, trace(req.matches[1], req.get_param_value("format")));
			});
			server.Delete(R"(/sessions/([0-9a-f]+))", [this, reply](httplib::Request const& req, httplib::Response& res) {
				reply(res, remove(req.matches[1]));
			});
		}

	private:
		struct Session
		{
			std::string id;
			EngineConfig initial;
			std::unique_ptr<SegmentationState> state;
			std::shared_mutex mutex;
			std::mutex touch_mutex;
			Clock::time_point created;
			Clock::time_point touched;
		};

		std::shared_ptr<Session> find(std::string const& id)
		{
			std::shared_ptr<Session> s;
			{
				std::lock_guard lock(registry_mutex_);
				auto it = sessions_.find(id);
				if (it == sessions_.end())
					return nullptr;
				s = it->second;
			}
			std::lock_guard touch(s->touch_mutex);
			s->touched = Clock::now();
			return s;
		}

		static nlohmann::json stats(Session const& s)
		{
			auto const& st = *s.state;
			return {
				{ "id", s.id },
				{ "iteration", st.iteration() },
				{ "n_sr", st.n_sr() },
				{ "n_vr", st.n_vr() },
				{ "j", st.j() },
				{ "tau", st.tau() },
				{ "status", to_string(st.status()) },
				{ "converged", st.status() == Status::Converged },
				{ "stalled", st.status() == Status::Stalled },
				{ "mode", to_string(st.mode()) },
				{ "cutting", to_string(st.config().cutting) },
				{ "multiscalar", to_string(st.config().multiscalar) },
				{ "partitions_coincide", st.partitions_coincide() },
				{ "width", st.image().width() },
				{ "height", st.image().height() },
				{ "channels", st.image().channels() },
				{ "event_count", st.history().size() },
			};
		}

		static HttpReply error(int status, std::string const& message)
		{
			return { status, nlohmann::json{ { "error", message } }.dump() };
		}

		static HttpReply not_found(std::string const& id) { return error(404, "unknown session '" + id + "'"); }

		std::string new_id()
		{
			static char const* digits = "0123456789abcdef";
			std::string id(32, '0');
			for (int half = 0; half < 2; ++half)
			{
				std::uint64_t v = rng_();
				for (int i = 0; i < 16; ++i, v >>= 4)
					id[half * 16 + i] = digits[v & 0xf];
			}
			return id;
		}

		ServiceOptions options_;
		mutable std::mutex registry_mutex_;
		std::map<std::string, std::shared_ptr<Session>> sessions_;
		std::mt19937_64 rng_;
	};
}
