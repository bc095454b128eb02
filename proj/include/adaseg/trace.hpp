#pragma once

// Trace CSV and session JSON (export, import, bit-exact replay).

#include "adaseg/engine.hpp"
#include "adaseg/errors.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace adaseg
{
	inline constexpr char const* TraceHeader = "iteration,mode,strategy,channel,region_split,n_sr,n_vr,J,tau,delta_J";

	inline std::string format_real(double v)
	{
		char buf[32];
		std::snprintf(buf, sizeof buf, "%.9g", v);
		return buf;
	}

	inline std::string trace_row(SplitEvent const& e, Mode mode, int channels)
	{
		EngineConfig const cfg{ mode, e.cutting, e.multiscalar };
		std::ostringstream os;
		os << e.iteration << ',' << to_string(mode) << ',' << strategy_label(cfg) << ','
		   << channel_label(channels, e.channels) << ',' << e.region << ',' << e.n_sr << ',' << e.n_vr << ','
		   << format_real(e.j) << ',' << format_real(e.tau) << ',' << format_real(e.delta_j);
		return os.str();
	}

	inline std::string trace_csv(std::vector<SplitEvent> const& events, Mode mode, int channels)
	{
		std::string out = TraceHeader;
		out += '\n';
		for (auto const& e : events)
		{
			out += trace_row(e, mode, channels);
			out += '\n';
		}
		return out;
	}

	inline std::string trace_csv(SegmentationState const& state)
	{
		return trace_csv(state.history(), state.mode(), state.image().channels());
	}

	inline nlohmann::json cut_to_json(Cutting const& cut)
	{
		return std::visit(
			[](auto const& c) -> nlohmann::json {
				using T = std::decay_t<decltype(c)>;
				if constexpr (std::is_same_v<T, AxisCut>)
					return { { "kind", "axis" }, { "axis", c.axis == Axis::Vertical ? "vertical" : "horizontal" },
						{ "position", c.position } };
				else if constexpr (std::is_same_v<T, SignCut>)
					return { { "kind", "sign" }, { "channel", c.channel } };
				else
				{
					std::string bits(c.plus.size(), '0');
					for (std::size_t j = 0; j < bits.size(); ++j)
						bits[j] = c.plus[j] ? '1' : '0';
					return { { "kind", "mask" }, { "plus", bits } };
				}
			},
			cut);
	}

	inline Cutting cut_from_json(nlohmann::json const& j)
	{
		auto const kind = j.at("kind").get<std::string>();
		if (kind == "axis")
			return AxisCut{ j.at("axis").get<std::string>() == "vertical" ? Axis::Vertical : Axis::Horizontal,
				j.at("position").get<int>() };
		if (kind == "sign")
			return SignCut{ j.at("channel").get<int>() };
		if (kind == "mask")
		{
			auto const bits = j.at("plus").get<std::string>();
			ExplicitMask m;
			for (char b : bits)
				m.plus.push_back(b == '1');
			return m;
		}
		throw ConfigError("unknown cut kind '" + kind + "'");
	}

	inline nlohmann::json event_to_json(SplitEvent const& e, int channels)
	{
		nlohmann::json cuts = nlohmann::json::array();
		for (auto const& c : e.cuts)
			cuts.push_back(cut_to_json(c));
		return {
			{ "iteration", e.iteration },
			{ "channel", channel_label(channels, e.channels) },
			{ "region_split", e.region },
			{ "cuts", cuts },
			{ "children", e.children },
			{ "delta_j", e.delta_j },
			{ "n_sr", e.n_sr },
			{ "n_vr", e.n_vr },
			{ "j", e.j },
			{ "tau", e.tau },
			{ "cutting", to_string(e.cutting) },
			{ "multiscalar", to_string(e.multiscalar) },
		};
	}

	inline SplitEvent event_from_json(nlohmann::json const& j, int channels)
	{
		SplitEvent e;
		e.iteration = j.at("iteration").get<std::size_t>();
		auto const label = j.at("channel").get<std::string>();
		for (int k = 0; k < channels; ++k)
			if (label.find(channel_letter(channels, k)) != std::string::npos)
				e.channels = e.channels.with(k);
		e.region = j.at("region_split").get<RegionId>();
		for (auto const& c : j.at("cuts"))
			e.cuts.push_back(cut_from_json(c));
		e.children = j.at("children").get<std::vector<RegionId>>();
		e.delta_j = j.at("delta_j").get<double>();
		e.n_sr = j.at("n_sr").get<std::size_t>();
		e.n_vr = j.at("n_vr").get<std::size_t>();
		e.j = j.at("j").get<double>();
		e.tau = j.at("tau").get<double>();
		e.cutting = parse_cutting_strategy(j.at("cutting").get<std::string>());
		e.multiscalar = parse_multiscalar_strategy(j.at("multiscalar").get<std::string>());
		return e;
	}

	inline bool same_event(SplitEvent const& a, SplitEvent const& b)
	{
		return a.iteration == b.iteration && a.channels == b.channels && a.region == b.region && a.cuts == b.cuts &&
			a.children == b.children && a.delta_j == b.delta_j && a.n_sr == b.n_sr && a.n_vr == b.n_vr &&
			a.j == b.j && a.tau == b.tau && a.cutting == b.cutting && a.multiscalar == b.multiscalar;
	}

	inline nlohmann::json config_to_json(EngineConfig const& c)
	{
		return { { "mode", to_string(c.mode) }, { "cutting", to_string(c.cutting) },
			{ "multiscalar", to_string(c.multiscalar) } };
	}

	inline EngineConfig config_from_json(nlohmann::json const& j)
	{
		EngineConfig c;
		c.mode = parse_mode(j.at("mode").get<std::string>());
		c.cutting = parse_cutting_strategy(j.at("cutting").get<std::string>());
		c.multiscalar = parse_multiscalar_strategy(j.at("multiscalar").get<std::string>());
		return c;
	}

	// Everything needed to rebuild the state from the same image.
	inline nlohmann::json session_to_json(SegmentationState const& state, EngineConfig const& initial)
	{
		auto const& img = state.image();
		nlohmann::json steps = nlohmann::json::array();
		for (auto const& s : state.step_configs())
			steps.push_back({ { "cutting", to_string(s.cutting) }, { "multiscalar", to_string(s.multiscalar) } });
		nlohmann::json events = nlohmann::json::array();
		for (auto const& e : state.history())
			events.push_back(event_to_json(e, img.channels()));
		return {
			{ "format", "adaseg-session" },
			{ "version", 1 },
			{ "image",
				{ { "hash", image_hash(img) }, { "width", img.width() }, { "height", img.height() },
					{ "channels", img.channels() } } },
			{ "config", config_to_json(initial) },
			{ "steps", steps },
			{ "events", events },
		};
	}

	enum class ReplayStatus
	{
		Identical,
		HashMismatch,
		Diverged,
	};

	struct ReplayResult
	{
		ReplayStatus status = ReplayStatus::Identical;
		std::string message;
		std::unique_ptr<SegmentationState> state;
	};

	inline ReplayResult replay_session(nlohmann::json const& session, std::shared_ptr<ImageBuffer const> image)
	{
		ReplayResult out;
		if (session.value("format", "") != "adaseg-session")
			throw ConfigError("not a session file");
		if (session.at("image").at("hash").get<std::string>() != image_hash(*image))
		{
			out.status = ReplayStatus::HashMismatch;
			out.message = "image hash does not match the session";
			return out;
		}
		auto const config = config_from_json(session.at("config"));
		out.state = std::make_unique<SegmentationState>(image, config);
		for (auto const& s : session.at("steps"))
		{
			auto const events = out.state->step(parse_cutting_strategy(s.at("cutting").get<std::string>()),
				parse_multiscalar_strategy(s.at("multiscalar").get<std::string>()));
			if (events.empty())
			{
				out.status = ReplayStatus::Diverged;
				out.message = "replay ran out of splittable regions at iteration " +
					std::to_string(out.state->iteration() + 1);
				return out;
			}
		}
		auto const& recorded = session.at("events");
		auto const& history = out.state->history();
		if (recorded.size() != history.size())
		{
			out.status = ReplayStatus::Diverged;
			out.message = "event count differs: recorded " + std::to_string(recorded.size()) + ", replayed " +
				std::to_string(history.size());
			return out;
		}
		for (std::size_t i = 0; i < history.size(); ++i)
			if (!same_event(event_from_json(recorded[i], image->channels()), history[i]))
			{
				out.status = ReplayStatus::Diverged;
				out.message = "event " + std::to_string(i) + " differs";
				return out;
			}
		return out;
	}
}
