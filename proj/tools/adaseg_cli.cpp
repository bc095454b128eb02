// adaseg: command-line front end for greedy adaptive image segmentation.
//
//   adaseg segment  -i image.png -o outdir --target-regions 8
//   adaseg replay   --session outdir/session.json -i image.png
//   adaseg analysis --p 4,10,80 --out curves/
//   adaseg generate simple --size 256 --out simple.png
//   adaseg serve    --port 8080

#include "adaseg/adaseg.hpp"
#include "adaseg/server.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

namespace fs = std::filesystem;
using namespace adaseg;

namespace
{
	enum ExitCode
	{
		Ok = 0,
		IoFailure = 1,
		InvalidConfig = 2,
		StalledEarly = 3,
		Diverged = 4,
	};

	int log_level()
	{
		char const* v = std::getenv("ADASEG_LOG");
		if (!v)
			return 1;
		std::string const s = v;
		return s == "quiet" ? 0 : s == "debug" ? 2 : 1;
	}

	void log(int level, std::string const& msg)
	{
		if (level <= log_level())
			std::cerr << msg << '\n';
	}

	void write_text(fs::path const& path, std::string const& text)
	{
		std::ofstream out(path, std::ios::binary | std::ios::trunc);
		if (!out || !(out << text))
			throw IoError("cannot write " + path.string());
	}

	std::string read_text(fs::path const& path)
	{
		std::ifstream in(path, std::ios::binary);
		if (!in)
			throw IoError("cannot open " + path.string());
		return { std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>() };
	}

	struct SegmentOptions
	{
		std::string input;
		std::string out_dir;
		std::string mode = "vector";
		std::string cutting = "overall-best";
		std::string family = "all-positions";
		std::string multiscalar = "best-component-only";
		std::optional<std::size_t> target_regions;
		std::optional<std::size_t> target_scalar_regions;
		std::optional<double> target_tau;
		std::optional<std::size_t> max_iterations;
		std::optional<double> j_epsilon;
		std::vector<std::size_t> snapshots;
		std::size_t snapshot_every = 0;
	};

	EngineConfig engine_config(std::string const& mode, std::string const& cutting, std::string const& family,
		std::string const& multiscalar)
	{
		EngineConfig c;
		c.mode = parse_mode(mode);
		c.cutting = parse_cutting_strategy(cutting);
		if (c.cutting.kind == CuttingKind::BestInFamily)
		{
			if (family == "midpoints")
				c.cutting.family = FamilyMode::Midpoints;
			else if (family != "all-positions")
				throw ConfigError("unknown family mode '" + family + "'");
		}
		c.multiscalar = parse_multiscalar_strategy(multiscalar);
		return c;
	}

	void write_snapshot(SegmentationState const& st, fs::path const& dir)
	{
		char stem[32];
		std::snprintf(stem, sizeof stem, "iter_%06zu", st.iteration());
		auto const colors = st.segmented();
		auto const labels = st.vector_labels();
		auto const& img = st.image();
		detail::write_file(dir / (std::string(stem) + ".png"), encode_png(colors));
		detail::write_file(dir / (std::string(stem) + "_edges.png"), encode_png(edge_overlay(colors, labels)));
		detail::write_file(dir / (std::string(stem) + "_labels.bin"), encode_labels(labels, img.width(), img.height()));
	}

	int cmd_segment(SegmentOptions const& o)
	{
		StopCriterion stop;
		stop.target_vector_regions = o.target_regions;
		stop.target_scalar_regions = o.target_scalar_regions;
		stop.target_tau = o.target_tau;
		stop.max_iterations = o.max_iterations;
		stop.j_epsilon = o.j_epsilon;
		int const criteria = (o.target_regions ? 1 : 0) + (o.target_scalar_regions ? 1 : 0) + (o.target_tau ? 1 : 0) +
			(o.max_iterations ? 1 : 0) + (o.j_epsilon ? 1 : 0);
		if (criteria != 1)
			throw ConfigError("segment needs exactly one stop criterion");
		auto const config = engine_config(o.mode, o.cutting, o.family, o.multiscalar);

		auto image = std::make_shared<ImageBuffer const>(load_image(o.input));
		fs::path const dir = o.out_dir;
		std::error_code ec;
		fs::create_directories(dir, ec);
		if (ec)
			throw IoError("cannot create " + dir.string() + ": " + ec.message());

		SegmentationState st(image, config);
		std::set<std::size_t> const schedule(o.snapshots.begin(), o.snapshots.end());
		auto scheduled = [&](std::size_t n) {
			return schedule.count(n) || (o.snapshot_every > 0 && n % o.snapshot_every == 0);
		};
		log(1, "segmenting " + o.input + " (" + std::to_string(image->width()) + "x" + std::to_string(image->height()) +
				", " + strategy_label(config) + ")");

		Status status = Status::Running;
		for (;;)
		{
			if (scheduled(st.iteration()))
				write_snapshot(st, dir);
			if (st.criterion_met(stop))
			{
				status = Status::CriterionMet;
				break;
			}
			auto const events = st.step();
			if (events.empty())
			{
				status = st.status();
				break;
			}
			log(2, "iteration " + std::to_string(st.iteration()) + ": n_vr=" + std::to_string(st.n_vr()) +
					" J=" + format_real(st.j()) + " tau=" + format_real(st.tau()));
		}
		if (!scheduled(st.iteration()))
			write_snapshot(st, dir);
		write_text(dir / "trace.csv", trace_csv(st));
		write_text(dir / "session.json", session_to_json(st, config).dump(1) + "\n");
		log(1, "finished: " + to_string(status) + " after " + std::to_string(st.iteration()) +
				" iterations, n_vr=" + std::to_string(st.n_vr()) + ", tau=" + format_real(st.tau()));
		return status == Status::Stalled ? StalledEarly : Ok;
	}

	int cmd_replay(std::string const& session_path, std::string const& input, std::string const& trace_path)
	{
		nlohmann::json session;
		try
		{
			session = nlohmann::json::parse(read_text(session_path));
		}
		catch (nlohmann::json::exception const& e)
		{
			throw ConfigError(std::string("malformed session: ") + e.what());
		}
		auto image = std::make_shared<ImageBuffer const>(load_image(input));
		auto result = replay_session(session, image);
		if (result.status == ReplayStatus::HashMismatch)
		{
			std::cerr << "replay: " << result.message << '\n';
			return InvalidConfig;
		}
		if (result.status == ReplayStatus::Diverged)
		{
			std::cerr << "replay: " << result.message << '\n';
			return Diverged;
		}
		if (!trace_path.empty() && read_text(trace_path) != trace_csv(*result.state))
		{
			std::cerr << "replay: trace differs from " << trace_path << '\n';
			return Diverged;
		}
		log(1, "replay identical: " + std::to_string(result.state->history().size()) + " events");
		return Ok;
	}

	int cmd_analysis(std::vector<std::size_t> const& ps, std::vector<double> xi, std::string const& out)
	{
		if (ps.empty())
			throw ConfigError("analysis needs at least one --p");
		for (auto p : ps)
			if (p < 2)
				throw ConfigError("p must be >= 2");
		if (xi.empty())
			xi = uniform_grid(0.01);
		if (out.empty())
		{
			for (auto p : ps)
			{
				if (ps.size() > 1)
					std::cout << "# p=" << p << '\n';
				std::cout << quality_csv(quality_curve(p, xi));
			}
			return Ok;
		}
		if (ps.size() == 1 && fs::path(out).extension() == ".csv")
		{
			write_text(out, quality_csv(quality_curve(ps[0], xi)));
			return Ok;
		}
		std::error_code ec;
		fs::create_directories(out, ec);
		if (ec)
			throw IoError("cannot create " + out + ": " + ec.message());
		for (auto p : ps)
			write_text(fs::path(out) / ("quality_p" + std::to_string(p) + ".csv"), quality_csv(quality_curve(p, xi)));
		return Ok;
	}

	int cmd_generate(std::string const& kind, int size, std::uint64_t seed, std::string const& out)
	{
		ImageBuffer img;
		if (kind == "simple")
			img = generate_simple(size, default_simple_colors(), seed);
		else if (kind == "perturbed")
			img = generate_perturbed(size, default_simple_colors(), default_inclusion_colors(), seed);
		else
			throw ConfigError("unknown synthetic image kind '" + kind + "'");
		save_image(img, out);
		return Ok;
	}

	int cmd_serve(std::string const& host, int port, std::string const& ui_dir, long ttl, std::size_t max_upload_mb)
	{
		ServiceOptions options;
		options.idle_ttl = std::chrono::seconds(ttl);
		options.max_upload_bytes = max_upload_mb << 20;
		SessionService service(options);
		httplib::Server server;
		service.mount(server);
		if (!ui_dir.empty())
		{
			if (!server.set_mount_point("/", ui_dir))
				throw IoError("cannot serve UI bundle from " + ui_dir);
		}
		else
			server.Get("/", [](httplib::Request const&, httplib::Response& res) {
				res.set_content("adaseg session service: POST /sessions to start\n", "text/plain");
			});
		log(1, "listening on " + host + ":" + std::to_string(port));
		if (!server.listen(host, port))
			throw IoError("cannot listen on " + host + ":" + std::to_string(port));
		return Ok;
	}
}

int main(int argc, char** argv)
{
	CLI::App app{ "Greedy adaptive image segmentation by refinement indicators" };
	app.require_subcommand(1);

	SegmentOptions seg;
	auto* segment = app.add_subcommand("segment", "Segment an image and write trace, session and snapshots");
	segment->add_option("-i,--input", seg.input, "Input image (PNG, PPM P6, PGM P5)")->required();
	segment->add_option("-o,--out", seg.out_dir, "Output directory")->required();
	segment->add_option("--mode", seg.mode, "vector | multiscalar")->capture_default_str();
	segment->add_option("--cutting", seg.cutting, "overall-best | best-in-family")->capture_default_str();
	segment->add_option("--family", seg.family, "Axis-cut family: all-positions | midpoints")->capture_default_str();
	segment
		->add_option("--multiscalar", seg.multiscalar,
			"best-component-only | best-component-for-each | combine-best-components")
		->capture_default_str();
	segment->add_option("--target-regions", seg.target_regions, "Stop at this many uniform-color regions (n_vr)");
	segment->add_option("--target-scalar-regions", seg.target_scalar_regions, "Stop at this many scalar regions (n_sr)");
	segment->add_option("--target-tau", seg.target_tau, "Stop once this percentage of the data is explained");
	segment->add_option("--max-iterations", seg.max_iterations, "Stop after this many iterations");
	segment->add_option("--j-epsilon", seg.j_epsilon, "Stop once the misfit J is at most this value");
	segment->add_option("--snapshots", seg.snapshots, "Iterations to snapshot (comma separated)")->delimiter(',');
	segment->add_option("--snapshot-every", seg.snapshot_every, "Snapshot every k iterations");

	std::string session_path, replay_input, replay_trace;
	auto* replay = app.add_subcommand("replay", "Replay a session file and verify its trace");
	replay->add_option("--session", session_path, "session.json written by segment")->required();
	replay->add_option("-i,--input", replay_input, "The image the session was recorded on")->required();
	replay->add_option("--trace", replay_trace, "Also compare against this trace.csv");

	std::vector<std::size_t> ps;
	std::vector<double> xi;
	std::string analysis_out;
	auto* analysis = app.add_subcommand("analysis", "Indicator quality curves Pr{xi <= ratio}");
	analysis->add_option("--p", ps, "Region sizes (comma separated)")->delimiter(',')->required();
	analysis->add_option("--xi", xi, "xi grid (comma separated); default 0, 0.01, ..., 1")->delimiter(',');
	analysis->add_option("--out", analysis_out, "Output .csv file (single p) or directory; stdout if omitted");

	std::string kind, gen_out;
	int size = 256;
	std::uint64_t seed = 0;
	auto* generate = app.add_subcommand("generate", "Write a synthetic flat-color test image");
	generate->add_option("kind", kind, "simple | perturbed")->required();
	generate->add_option("--size", size, "Side length in pixels")->capture_default_str();
	generate->add_option("--seed", seed, "Layout jitter seed (0 = canonical layout)")->capture_default_str();
	generate->add_option("--out", gen_out, "Output PNG")->required();

	std::string host = "127.0.0.1", ui_dir;
	int port = 8080;
	long ttl = 3600;
	std::size_t max_upload_mb = 32;
	auto* serve = app.add_subcommand("serve", "Host the interactive session API");
	serve->add_option("--host", host)->capture_default_str();
	serve->add_option("--port", port)->capture_default_str();
	serve->add_option("--ui-dir", ui_dir, "Static web UI bundle to serve at /");
	serve->add_option("--ttl", ttl, "Idle session lifetime in seconds")->capture_default_str();
	serve->add_option("--max-upload-mb", max_upload_mb)->capture_default_str();

	try
	{
		app.parse(argc, argv);
	}
	catch (CLI::CallForHelp const& e)
	{
		return app.exit(e);
	}
	catch (CLI::ParseError const& e)
	{
		app.exit(e);
		return InvalidConfig;
	}

	try
	{
		if (*segment)
			return cmd_segment(seg);
		if (*replay)
			return cmd_replay(session_path, replay_input, replay_trace);
		if (*analysis)
			return cmd_analysis(ps, xi, analysis_out);
		if (*generate)
			return cmd_generate(kind, size, seed, gen_out);
		if (*serve)
			return cmd_serve(host, port, ui_dir, ttl, max_upload_mb);
	}
	catch (IoError const& e)
	{
		std::cerr << "error: " << e.what() << '\n';
		return IoFailure;
	}
	catch (ConfigError const& e)
	{
		std::cerr << "error: " << e.what() << '\n';
		return InvalidConfig;
	}
	catch (StateError const& e)
	{
		std::cerr << "error: " << e.what() << '\n';
		return InvalidConfig;
	}
	return Ok;
}
