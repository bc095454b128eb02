// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include "adaseg/adaseg.hpp"
#include "support/oracles.hpp"
#include "support/process.hpp"
#include "support/reference_engine.hpp"

#include <bit>
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

using namespace adaseg;
using namespace adaseg::test;

namespace
{
	struct Outcome
	{
		bool pass = true;
		std::string detail;

		void fail(std::string const& why)
		{
			if (pass)
				detail = why;
			pass = false;
		}
	};

	std::shared_ptr<ImageBuffer const> share(ImageBuffer img) { return std::make_shared<ImageBuffer const>(std::move(img)); }

	std::string fmt(char const* f, double a, double b = 0.0, double c = 0.0)
	{
		char buf[256];
		std::snprintf(buf, sizeof buf, f, a, b, c);
		return buf;
	}

	// A random region: one row of random 8-bit RGB data, with a random non-empty 2-partition.
	struct RandomInstance
	{
		ImageBuffer img;
		Partition partition;
		std::vector<bool> plus;
	};

	RandomInstance random_instance(std::mt19937_64& rng)
	{
		std::uniform_real_distribution<double> log_size(std::log(2.0), std::log(1e4));
		int const p = std::clamp(static_cast<int>(std::lround(std::exp(log_size(rng)))), 2, 10000);
		auto img = random_image(p, 1, 3, rng());
		auto partition = Partition::single_region(img);
		std::vector<bool> plus(p);
		std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.05, 0.95)(rng));
		for (auto&& b : plus)
			b = coin(rng);
		plus[0] = true;
		plus[p - 1] = false;
		return { std::move(img), std::move(partition), std::move(plus) };
	}

	Outcome exact_relation()
	{
		Outcome out;
		std::mt19937_64 rng(2024);
		double worst = 0.0;
		for (int trial = 0; trial < 200; ++trial)
		{
			auto inst = random_instance(rng);
			Cutting const cut = ExplicitMask{ inst.plus };
			auto const sides = side_stats(inst.partition, 0, cut, inst.img);
			std::size_t const pp = sides.plus.pixel_count, pm = sides.minus.pixel_count, p = pp + pm;
			for (int k = 0; k < 3; ++k)
			{
				double const dj = channel_exact_indicator(sides.plus, sides.minus, k);
				double const lambda = first_order_indicator(inst.img, inst.partition, 0, cut, k);
				double const predicted = lambda * lambda * p / (8.0 * pp * pm);
				double const err = std::abs(dj - predicted) / std::max(1.0, dj);
				worst = std::max(worst, err);
				if (err > 1e-9)
					out.fail(fmt("identity off by %.3g (relative) on trial %.0f", err, trial));
				if (dj < lambda * lambda / (2.0 * p) * (1 - 1e-12))
					out.fail(fmt("lower bound violated on trial %.0f", trial));
			}
		}
		if (out.pass)
			out.detail = fmt("200 regions x 3 channels, worst relative deviation %.3g", worst);
		return out;
	}

	Outcome exact_indicator_oracle()
	{
		Outcome out;
		double worst = 0.0;
		std::size_t checked = 0;
		auto check = [&](ImageBuffer const& img, Partition const& part, RegionId id, Cutting const& cut) {
			auto const sides = side_stats(part, id, cut, img);
			auto const mask = part.side_mask(id, cut, img);
			for (int k = 0; k < img.channels(); ++k)
			{
				double const dj = channel_exact_indicator(sides.plus, sides.minus, k);
				double const brute = brute_cut(img, part.region(id).pixels, mask, k).delta_j;
				double const err = std::abs(dj - brute) / std::max(1.0, std::abs(brute));
				worst = std::max(worst, err);
				++checked;
				if (err > 1e-9)
					out.fail(fmt("stats %.17g vs brute force %.17g", dj, brute));
			}
		};
		std::mt19937_64 rng(2024);
		for (int trial = 0; trial < 200; ++trial)
		{
			auto inst = random_instance(rng);
			check(inst.img, inst.partition, 0, ExplicitMask{ inst.plus });
		}
		std::mt19937_64 srng(77);
		for (int d = 0; d < 100; ++d)
		{
			auto img = random_image(8, 6, 3, srng(), d % 2 ? 256 : 4);
			std::vector<std::uint32_t> order(img.pixel_count());
			std::iota(order.begin(), order.end(), 0u);
			std::shuffle(order.begin(), order.end(), srng);
			std::vector<RegionId> labels(img.pixel_count());
			for (std::size_t i = 0, r = 0; i < order.size(); ++r)
			{
				std::size_t const n = 1 + srng() % 12;
				for (std::size_t j = 0; j < n && i < order.size(); ++j, ++i)
					labels[order[i]] = static_cast<RegionId>(r);
			}
			auto part = Partition::from_labels(img, labels);
			for (RegionId id : part.region_ids())
				for (int k = 0; k < 3; ++k)
				{
					auto s = optimal_sign_cut(img, part, id, k);
					if (s.valid)
						check(img, part, id, s.cut);
				}
		}
		if (out.pass)
			out.detail = fmt("%.0f channel cuts, worst relative deviation %.3g", double(checked), worst);
		return out;
	}

	Outcome sign_cut_oracle()
	{
		Outcome out;
		std::mt19937_64 rng(77);
		std::size_t regions = 0;
		for (int d = 0; d < 100; ++d)
		{
			// Half the datasets use 4 grey levels so that ties at the mean occur.
			auto img = random_image(8, 6, 3, rng(), d % 2 ? 256 : 4);
			std::vector<std::uint32_t> order(img.pixel_count());
			std::iota(order.begin(), order.end(), 0u);
			std::shuffle(order.begin(), order.end(), rng);
			std::vector<RegionId> labels(img.pixel_count());
			for (std::size_t i = 0, r = 0; i < order.size(); ++r)
			{
				std::size_t const n = 1 + rng() % 12;
				for (std::size_t j = 0; j < n && i < order.size(); ++j, ++i)
					labels[order[i]] = static_cast<RegionId>(r);
			}
			auto part = Partition::from_labels(img, labels);
			for (RegionId id : part.region_ids())
			{
				auto const& pixels = part.region(id).pixels;
				if (pixels.size() < 2)
					continue;
				++regions;
				std::array<double, 3> lambda_star{}, enumerated{};
				for (int k = 0; k < 3; ++k)
				{
					std::vector<double> values;
					for (auto i : pixels)
						values.push_back(img.at(i, k));
					enumerated[k] = enumerate_max_abs_lambda(values);
					auto s = optimal_sign_cut(img, part, id, k);
					lambda_star[k] = s.lambda_star;
					if (!close_rel(s.lambda_star, enumerated[k], 1e-12))
						out.fail(fmt("lambda* %.17g but enumeration finds %.17g", s.lambda_star, enumerated[k]));
					if (s.valid)
					{
						auto mask = part.side_mask(id, s.cut, img);
						double const realized = brute_cut(img, pixels, mask, k).lambda;
						if (!close_rel(std::abs(realized), enumerated[k], 1e-12))
							out.fail(fmt("sign cut realizes %.17g, optimum %.17g", realized, enumerated[k]));
					}
					else if (enumerated[k] != 0.0)
						out.fail("sign cut reported invalid on a non-constant channel");
				}
				auto const choice = best_channel(lambda_star);
				double const inf_norm = *std::max_element(enumerated.begin(), enumerated.end());
				if (!close_rel(lambda_star[choice.channel], inf_norm, 1e-12))
					out.fail(fmt("k* cut gives %.17g, best infinity norm %.17g", lambda_star[choice.channel], inf_norm));
			}
		}
		if (out.pass)
			out.detail = fmt("%.0f regions of 2..12 pixels, all 2^p-2 partitions enumerated", double(regions));
		return out;
	}

	Outcome quality_curve_reproduction()
	{
		Outcome out;
		auto const c4 = quality_curve(4, { 0.9 });
		if (std::abs(c4.points[0].second - 6.0 / 14.0) > 1e-15)
			out.fail(fmt("Pr(p=4, xi=0.9) = %.17g", c4.points[0].second));
		auto const c2 = quality_curve(2, uniform_grid());
		for (auto const& [xi, pr] : c2.points)
			if (pr != 1.0)
				out.fail(fmt("Pr(p=2, xi=%g) = %.17g", xi, pr));
		double const p80 = quality_curve(80, { 0.9 }).points[0].second;
		if (p80 < 0.99)
			out.fail(fmt("Pr(p=80, xi=0.9) = %.17g", p80));
		double worst_sigma = 0.0;
		std::size_t const samples = 1000000;
		std::uint64_t seed = 1;
		for (std::size_t p : { 4, 10, 80 })
			for (double xi : { 0.5, 0.9 })
			{
				double const exact = quality_probability(p, xi);
				double const mc = quality_probability_mc(p, xi, samples, seed++);
				double const se = std::sqrt(std::max(exact * (1 - exact), 1e-300) / samples);
				double const z = std::abs(mc - exact) / se;
				worst_sigma = std::max(worst_sigma, z);
				if (std::abs(mc - exact) > 3 * se + 1e-12)
					out.fail(fmt("Monte Carlo %.6f vs exact %.6f (p=%.0f)", mc, exact, double(p)));
			}
		if (out.pass)
			out.detail = fmt("Pr(4,0.9)=6/14, Pr(80,0.9)=%.6f, Monte Carlo within %.2f sigma", p80, worst_sigma);
		return out;
	}

	Outcome synthetic_reproduction()
	{
		Outcome out;
		StopCriterion stop;
		stop.j_epsilon = 0.0;
		{
			auto const t0 = std::chrono::steady_clock::now();
			SegmentationState s(share(generate_simple(256)), {});
			s.run(stop);
			double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
			if (s.j() != 0.0 || s.n_vr() != 4)
				out.fail(fmt("simple: J=%g with %.0f regions", s.j(), double(s.n_vr())));
			if (secs >= 5.0)
				out.fail(fmt("simple took %.2f s", secs));
		}
		auto const t0 = std::chrono::steady_clock::now();
		auto const cls = perturbed_classes(256);
		SegmentationState s(share(generate_perturbed(256)), {});
		// Replays the run to classify every split: a split is shape-level when the
		// region it cuts holds pixels of more than one shape (inclusions count as
		// part of their host shape), inclusion-level otherwise.
		std::vector<char> kinds;
		while (!s.criterion_met(stop))
		{
			auto const before = s.partitions()[0];
			auto const ev = s.step();
			if (ev.empty())
				break;
			std::set<int> hosts;
			for (auto i : before.region(ev[0].region).pixels)
				hosts.insert(cls[i] < 4 ? cls[i] : cls[i] - 3);
			kinds.push_back(hosts.size() > 1 ? 'S' : 'I');
		}
		double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
		std::string const order(kinds.begin(), kinds.end());
		if (s.j() != 0.0 || s.n_vr() != 7)
			out.fail(fmt("perturbed: J=%g with %.0f regions", s.j(), double(s.n_vr())));
		if (order.find("IS") != std::string::npos)
			out.fail("an inclusion split precedes a shape split: " + order);
		if (secs >= 5.0)
			out.fail(fmt("perturbed took %.2f s", secs));
		if (out.pass)
			out.detail = "simple: 4 regions, perturbed: 7 regions, split order " + order;
		return out;
	}

	std::vector<EngineConfig> all_configs()
	{
		std::vector<EngineConfig> out;
		for (auto cutting : { "overall-best", "best-in-family" })
		{
			auto const c = parse_cutting_strategy(cutting);
			out.push_back({ Mode::Vector, c, MultiscalarStrategy::BestComponentOnly });
			for (auto m : { MultiscalarStrategy::BestComponentOnly, MultiscalarStrategy::BestComponentForEach,
					 MultiscalarStrategy::CombineBestComponents })
				out.push_back({ Mode::Multiscalar, c, m });
		}
		return out;
	}

	std::string name_of(EngineConfig const& c) { return to_string(c.mode) + ":" + strategy_label(c); }

	Outcome monotonicity_and_termination()
	{
		Outcome out;
		std::size_t runs = 0, events = 0;
		for (int i = 0; i < 20; ++i)
		{
			auto const img = random_image(32, 32, 3, 1000 + i);
			auto const shared = share(img);
			for (auto const& cfg : all_configs())
			{
				SegmentationState s(shared, cfg);
				double j = s.j(), tau = s.tau();
				while (true)
				{
					auto const ev = s.step();
					if (ev.empty())
						break;
					for (auto const& e : ev)
					{
						if (!(e.j < j))
							out.fail(name_of(cfg) + fmt(": J did not decrease (%.17g -> %.17g)", j, e.j));
						if (e.tau < tau)
							out.fail(name_of(cfg) + ": tau decreased");
						j = e.j;
						tau = e.tau;
						++events;
					}
				}
				++runs;
				if (cfg.cutting.kind != CuttingKind::OverallBest)
					continue;
				if (s.status() != Status::Converged)
					out.fail(name_of(cfg) + ": ended " + to_string(s.status()));
				auto const c = s.segmented();
				for (std::size_t v = 0; v < c.data.size(); ++v)
					if (std::abs(c.data[v] - img.data()[v]) > 1e-9)
					{
						out.fail(name_of(cfg) + ": c differs from d");
						break;
					}
				for (auto const& p : s.partitions())
					if (p.region_count() - 1 >= img.pixel_count())
						out.fail(name_of(cfg) + ": too many splits");
			}
		}
		if (out.pass)
			out.detail = fmt("%.0f runs, %.0f committed splits", double(runs), double(events));
		return out;
	}

	Outcome incremental_equals_naive()
	{
		Outcome out;
		std::size_t events = 0;
		for (int i = 0; i < 2 && out.pass; ++i)
		{
			auto const img = random_image(32, 32, 3, 500 + i);
			auto const shared = share(img);
			for (auto const& cfg : all_configs())
			{
				SegmentationState s(shared, cfg);
				ReferenceEngine ref(img, cfg);
				for (std::size_t step = 0;; ++step)
				{
					auto const a = s.step();
					auto const b = ref.step();
					if (a.size() != b.size())
					{
						out.fail(name_of(cfg) + fmt(": event count differs at iteration %.0f", double(step + 1)));
						break;
					}
					if (a.empty())
						break;
					for (std::size_t e = 0; e < a.size(); ++e)
					{
						++events;
						bool same_cuts = a[e].cuts.size() == b[e].cuts.size();
						for (std::size_t c = 0; same_cuts && c < a[e].cuts.size(); ++c)
							same_cuts = cut_to_json(a[e].cuts[c]) == cut_to_json(b[e].cuts[c]);
						if (a[e].region != b[e].region || !(a[e].channels == b[e].channels) || !same_cuts ||
							!close_rel(a[e].delta_j, b[e].delta_j, 1e-12))
						{
							out.fail(name_of(cfg) + fmt(": traces diverge at iteration %.0f", double(step + 1)));
							break;
						}
					}
					if (!out.pass)
						break;
				}
			}
		}
		if (out.pass)
			out.detail = fmt("8 configurations on 2 images, %.0f identical split events", double(events));
		return out;
	}

	Outcome multiscalar_accounting()
	{
		Outcome out;
		std::map<std::size_t, std::size_t> combine_hist;
		for (int i = 0; i < 3; ++i)
		{
			auto const img = share(random_image(64, 64, 3, 700 + i));
			for (auto m : { MultiscalarStrategy::BestComponentOnly, MultiscalarStrategy::BestComponentForEach,
					 MultiscalarStrategy::CombineBestComponents })
			{
				SegmentationState s(img, { Mode::Multiscalar, {}, m });
				for (int step = 0; step < 100; ++step)
				{
					std::size_t splittable = 0;
					for (int k = 0; k < 3; ++k)
						splittable += s.tentative(k) ? 1 : 0;
					std::size_t const nsr = s.n_sr(), nvr = s.n_vr();
					if (s.step().empty())
					{
						out.fail(to_string(m) + ": ran out of splits");
						break;
					}
					std::size_t const dsr = s.n_sr() - nsr, dvr = s.n_vr() - nvr;
					if (m == MultiscalarStrategy::BestComponentOnly && dsr != 1)
						out.fail(fmt("best-component-only added %.0f scalar regions", double(dsr)));
					if (m == MultiscalarStrategy::BestComponentForEach && splittable == 3 && dsr != 3)
						out.fail(fmt("best-component-for-each added %.0f scalar regions", double(dsr)));
					if (m == MultiscalarStrategy::CombineBestComponents)
					{
						++combine_hist[dvr];
						if (dvr < 3 || dvr > 7)
							out.fail(fmt("combine added %.0f uniform-color regions at step %.0f", double(dvr), step + 1.0));
						if (!s.partitions_coincide())
							out.fail("combine left non-coinciding partitions");
					}
				}
			}
		}
		std::ostringstream hist;
		for (auto const& [added, count] : combine_hist)
			hist << " +" << added << ":" << count;
		out.detail = (out.pass ? "300 steps per strategy; combine increments" : out.detail + "; combine increments") + hist.str();
		return out;
	}

	Outcome performance()
	{
		Outcome out;
		auto const img = share(random_image(400, 533, 3, 99));
		auto const t0 = std::chrono::steady_clock::now();
		SegmentationState s(img, {});
		StopCriterion stop;
		stop.max_iterations = 200;
		s.run(stop);
		double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
		if (s.iteration() != 200)
			out.fail(fmt("only %.0f iterations", double(s.iteration())));
		if (secs >= 10.0)
			out.fail(fmt("200 iterations took %.2f s", secs));
		if (out.pass)
			out.detail = fmt("200 iterations on 400x533 RGB in %.2f s", secs);
		return out;
	}

	Outcome determinism()
	{
		Outcome out;
		auto const dir = fresh_dir("acceptance_determinism");
		auto const img = (dir / "perturbed.png").string();
		if (run_cli("generate perturbed --size 128 --out " + img) != 0)
		{
			out.fail("generate failed");
			return out;
		}
		std::size_t compared = 0;
		for (std::string const args :
			{ " --j-epsilon 0 --snapshot-every 2",
				" --mode multiscalar --multiscalar combine-best-components --cutting best-in-family --max-iterations 12 "
				"--snapshot-every 4" })
		{
			auto const a = dir / "a", b = dir / "b";
			std::filesystem::remove_all(a);
			std::filesystem::remove_all(b);
			if (run_cli("segment -i " + img + " -o " + a.string() + args) != 0 ||
				run_cli("segment -i " + img + " -o " + b.string() + args) != 0)
			{
				out.fail("segment failed for" + args);
				continue;
			}
			for (auto const& entry : std::filesystem::directory_iterator(a))
			{
				auto const name = entry.path().filename();
				if (name.extension() != ".png" && name != "trace.csv")
					continue;
				++compared;
				if (slurp(entry.path()) != slurp(b / name))
					out.fail(name.string() + " differs between runs");
			}
			if (run_cli("replay --session " + (a / "session.json").string() + " -i " + img + " --trace " +
					(a / "trace.csv").string()) != 0)
				out.fail("replay did not exit 0 for" + args);
		}
		if (out.pass)
			out.detail = fmt("%.0f files byte-identical across runs, replay exit 0", double(compared));
		return out;
	}
}

int main()
{
	std::vector<std::pair<char const*, std::function<Outcome()>>> const criteria{
		{ "exact-relation identity", exact_relation },
		{ "sign-cut optimality oracle", sign_cut_oracle },
		{ "exact-indicator oracle", exact_indicator_oracle },
		{ "quality curve reproduction", quality_curve_reproduction },
		{ "synthetic simple/perturbed reproduction", synthetic_reproduction },
		{ "monotonicity and termination", monotonicity_and_termination },
		{ "incremental equals naive", incremental_equals_naive },
		{ "multiscalar accounting", multiscalar_accounting },
		{ "performance", performance },
		{ "determinism", determinism },
	};
	// Wall-clock budgets per criterion, in seconds (0 = none beyond the check itself).
	std::map<std::string, double> const budget{
		{ "exact-relation identity", 5.0 },
		{ "sign-cut optimality oracle", 30.0 },
		{ "quality curve reproduction", 10.0 },
	};
	int failures = 0;
	for (auto const& [name, run] : criteria)
	{
		auto const t0 = std::chrono::steady_clock::now();
		Outcome out;
		try
		{
			out = run();
		}
		catch (std::exception const& e)
		{
			out.fail(std::string("exception: ") + e.what());
		}
		double const secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
		auto const b = budget.find(name);
		if (b != budget.end() && secs >= b->second)
			out.fail(fmt("runtime %.2f s over the %.0f s budget", secs, b->second));
		failures += out.pass ? 0 : 1;
		std::printf("%s  %-40s %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", name, out.detail.c_str(), secs);
		std::fflush(stdout);
	}
	std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
	return failures == 0 ? 0 : 1;
}
