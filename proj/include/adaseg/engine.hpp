#pragma once

// Greedy refinement driver: vector segmentation (one shared partition) and
// multiscalar segmentation (one partition per channel), split one best cut at a time.

#include "adaseg/errors.hpp"
#include "adaseg/image.hpp"
#include "adaseg/indicators.hpp"
#include "adaseg/partition.hpp"
#include "adaseg/strategies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace adaseg
{
	enum class Mode
	{
		Vector,
		Multiscalar,
	};

	enum class MultiscalarStrategy
	{
		BestComponentOnly,
		BestComponentForEach,
		CombineBestComponents,
	};

	inline std::string to_string(Mode m) { return m == Mode::Vector ? "vector" : "multiscalar"; }

	inline Mode parse_mode(std::string const& name)
	{
		if (name == "vector")
			return Mode::Vector;
		if (name == "multiscalar")
			return Mode::Multiscalar;
		throw ConfigError("unknown mode '" + name + "'");
	}

	inline std::string to_string(MultiscalarStrategy s)
	{
		switch (s)
		{
		case MultiscalarStrategy::BestComponentOnly: return "best-component-only";
		case MultiscalarStrategy::BestComponentForEach: return "best-component-for-each";
		case MultiscalarStrategy::CombineBestComponents: return "combine-best-components";
		}
		return {};
	}

	inline MultiscalarStrategy parse_multiscalar_strategy(std::string const& name)
	{
		if (name == "best-component-only")
			return MultiscalarStrategy::BestComponentOnly;
		if (name == "best-component-for-each")
			return MultiscalarStrategy::BestComponentForEach;
		if (name == "combine-best-components")
			return MultiscalarStrategy::CombineBestComponents;
		throw ConfigError("unknown multiscalar strategy '" + name + "'");
	}

	struct EngineConfig
	{
		Mode mode = Mode::Vector;
		CuttingStrategy cutting;
		MultiscalarStrategy multiscalar = MultiscalarStrategy::BestComponentOnly;
		friend bool operator==(EngineConfig const&, EngineConfig const&) = default;
	};

	inline std::string strategy_label(EngineConfig const& c)
	{
		return c.mode == Mode::Vector ? to_string(c.cutting) : to_string(c.cutting) + "/" + to_string(c.multiscalar);
	}

	struct SplitEvent
	{
		std::size_t iteration = 0;
		ChannelSet channels;        // channels whose cut produced this split
		RegionId region = 0;        // id of the retired region
		std::vector<Cutting> cuts;  // one per channel in `channels` (one in vector mode)
		std::vector<RegionId> children;
		double delta_j = 0.0;       // realized misfit decrease, > 0
		std::size_t n_sr = 0;
		std::size_t n_vr = 0;
		double j = 0.0;
		double tau = 0.0;
		CuttingStrategy cutting;
		MultiscalarStrategy multiscalar = MultiscalarStrategy::BestComponentOnly;
	};

	struct StopCriterion
	{
		std::optional<std::size_t> target_vector_regions; // n_vr
		std::optional<std::size_t> target_scalar_regions; // n_sr
		std::optional<double> target_tau;                 // percent
		std::optional<std::size_t> max_iterations;
		std::optional<double> j_epsilon;

		bool any() const
		{
			return target_vector_regions || target_scalar_regions || target_tau || max_iterations || j_epsilon;
		}
	};

	enum class Status
	{
		Running,      // at least one splittable region remains
		CriterionMet,
		Converged,    // every region is constant: c = d
		Stalled,      // non-constant regions remain but no admissible cut decreases J
	};

	inline std::string to_string(Status s)
	{
		switch (s)
		{
		case Status::Running: return "running";
		case Status::CriterionMet: return "criterion-met";
		case Status::Converged: return "converged";
		case Status::Stalled: return "stalled";
		}
		return {};
	}

	// A channel's best split, computed but not committed.
	struct TentativeSplit
	{
		int channel = 0;
		RegionId region = 0;
		Cutting cut;
		double delta_j = 0.0;
	};

	struct RunResult
	{
		Status status = Status::Running;
		std::vector<SplitEvent> events;
	};

	namespace detail
	{
		// Ordered by decreasing delta_j, then increasing region id.
		struct Ranked
		{
			double delta_j;
			RegionId region;
			bool operator<(Ranked const& o) const
			{
				return delta_j != o.delta_j ? delta_j > o.delta_j : region < o.region;
			}
		};

		struct CandidateCache
		{
			std::map<RegionId, CandidateSplit> entries;
			std::set<Ranked> ranking; // splittable entries only

			void insert(CandidateSplit c)
			{
				if (c.splittable)
					ranking.insert({ c.delta_j, c.region });
				entries.insert_or_assign(c.region, std::move(c));
			}

			void erase(RegionId id)
			{
				auto it = entries.find(id);
				if (it == entries.end())
					return;
				if (it->second.splittable)
					ranking.erase({ it->second.delta_j, id });
				entries.erase(it);
			}

			CandidateSplit const* top() const
			{
				return ranking.empty() ? nullptr : &entries.at(ranking.begin()->region);
			}
		};

		// Neumaier-compensated running sum.
		struct CompensatedSum
		{
			double sum = 0.0;
			double comp = 0.0;

			void add(double v)
			{
				double const t = sum + v;
				comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
				sum = t;
			}
			double value() const { return sum + comp; }
			void reset(double v)
			{
				sum = v;
				comp = 0.0;
			}
		};

		struct TupleHash
		{
			std::size_t operator()(std::array<RegionId, MaxChannels> const& t) const
			{
				std::uint64_t h = 0x9e3779b97f4a7c15ull;
				for (auto v : t)
					h = (h ^ v) * 0xff51afd7ed558ccdull;
				return static_cast<std::size_t>(h ^ (h >> 29));
			}
		};
	}

	class SegmentationState
	{
	public:
		static constexpr std::size_t SnapshotInterval = 64;

		// Starts from one region per active partition, or from the given labelings
		// (one per channel in multiscalar mode, or a single one shared by all channels).
		SegmentationState(std::shared_ptr<ImageBuffer const> image, EngineConfig config,
			std::vector<std::vector<RegionId>> const& initial_labels = {})
			: image_(std::move(image)), mode_(config.mode)
		{
			if (!image_ || image_->empty())
				throw ConfigError("segmentation needs a non-empty image");
			ImageBuffer const& img = *image_;
			for (double v : img.data())
				norm_d2_ += v * v;

			std::size_t const count = mode_ == Mode::Vector ? 1 : static_cast<std::size_t>(img.channels());
			if (!initial_labels.empty() && initial_labels.size() != 1 && initial_labels.size() != count)
				throw ConfigError("expected one initial labeling or one per channel");
			core_.config = config;
			for (std::size_t p = 0; p < count; ++p)
			{
				if (initial_labels.empty())
					core_.partitions.push_back(Partition::single_region(img));
				else
					core_.partitions.push_back(
						Partition::from_labels(img, initial_labels[initial_labels.size() == 1 ? 0 : p]));
			}
			core_.caches.resize(count);
			core_.j.resize(count);
			if (tracks_tuples())
				for (std::size_t i = 0; i < img.pixel_count(); ++i)
					++core_.tuples[tuple_of(i)];
			if (mode_ == Mode::Multiscalar && config.multiscalar == MultiscalarStrategy::CombineBestComponents &&
				!partitions_coincide())
				throw StateError("combine-best-components requires coinciding channel partitions");
			rebuild_caches();
			for (std::size_t p = 0; p < count; ++p)
				core_.j[p].reset(recompute_j(p));
			refresh_status();
			snapshots_.emplace(0, core_);
		}

		ImageBuffer const& image() const { return *image_; }
		std::shared_ptr<ImageBuffer const> image_ptr() const { return image_; }
		Mode mode() const { return mode_; }
		EngineConfig const& config() const { return core_.config; }
		std::size_t iteration() const { return core_.iteration; }
		Status status() const { return core_.status; }
		std::span<Partition const> partitions() const { return core_.partitions; }
		std::vector<SplitEvent> const& history() const { return history_; }

		// Strategies in force at each committed iteration (index 0 = iteration 1).
		std::vector<EngineConfig> const& step_configs() const { return steps_; }

		// Channels scored by partition p.
		ChannelSet scored_channels(std::size_t p) const
		{
			return mode_ == Mode::Vector ? image_->all_channels() : ChannelSet::single(static_cast<int>(p));
		}

		CandidateSplit const& candidate(std::size_t p, RegionId id) const
		{
			auto it = core_.caches.at(p).entries.find(id);
			if (it == core_.caches.at(p).entries.end())
				throw StateError("unknown region id " + std::to_string(id));
			return it->second;
		}

		std::size_t cache_size(std::size_t p) const { return core_.caches.at(p).entries.size(); }

		double j() const
		{
			double total = 0.0;
			for (auto const& s : core_.j)
				total += s.value();
			return std::max(total, 0.0);
		}

		double channel_j(std::size_t p) const { return std::max(core_.j.at(p).value(), 0.0); }

		// Misfit recomputed from the region statistics.
		double recompute_j() const
		{
			double total = 0.0;
			for (std::size_t p = 0; p < core_.partitions.size(); ++p)
				total += recompute_j(p);
			return total;
		}

		double data_norm() const { return std::sqrt(norm_d2_); }

		// Percentage of explained data: 100 (1 - |d - c| / |d|), clamped to [0, 100].
		double tau() const { return tau_for(j()); }

		std::size_t n_vr() const
		{
			if (!tracks_tuples())
				return core_.partitions[0].region_count();
			return core_.tuples.size();
		}

		std::size_t n_sr() const
		{
			if (mode_ == Mode::Vector)
				return core_.partitions[0].region_count() * static_cast<std::size_t>(image_->channels());
			std::size_t n = 0;
			for (auto const& p : core_.partitions)
				n += p.region_count();
			return n;
		}

		bool partitions_coincide() const
		{
			if (core_.partitions.size() < 2)
				return true;
			std::size_t const nvr = n_vr();
			for (auto const& p : core_.partitions)
				if (p.region_count() != nvr)
					return false;
			return true;
		}

		ColorPlanes segmented() const
		{
			if (mode_ == Mode::Vector)
				return paint(core_.partitions[0], *image_);
			return paint_channels(core_.partitions, *image_);
		}

		// Labels of the uniform-color regions (the superimposition in multiscalar mode).
		std::vector<RegionId> vector_labels() const
		{
			auto const first = core_.partitions[0].labels();
			if (core_.partitions.size() == 1 || partitions_coincide())
				return { first.begin(), first.end() };
			std::unordered_map<std::array<RegionId, MaxChannels>, RegionId, detail::TupleHash> ids;
			std::vector<RegionId> labels(image_->pixel_count());
			for (std::size_t i = 0; i < labels.size(); ++i)
				labels[i] = ids.try_emplace(tuple_of(i), static_cast<RegionId>(ids.size())).first->second;
			return labels;
		}

		// Switching cutting strategy re-evaluates every cached candidate.
		void set_strategies(CuttingStrategy cutting, MultiscalarStrategy multiscalar)
		{
			if (mode_ == Mode::Multiscalar && multiscalar == MultiscalarStrategy::CombineBestComponents &&
				!partitions_coincide())
				throw StateError("combine-best-components requires coinciding channel partitions");
			core_.config.multiscalar = multiscalar;
			if (cutting != core_.config.cutting)
			{
				core_.config.cutting = cutting;
				rebuild_caches();
				refresh_status();
			}
		}

		// Best split of one channel's partition, not committed.
		std::optional<TentativeSplit> tentative(int channel) const
		{
			std::size_t const p = mode_ == Mode::Vector ? 0 : static_cast<std::size_t>(channel);
			if (channel < 0 || channel >= image_->channels())
				throw ConfigError("channel out of range");
			auto const* top = core_.caches[p].top();
			if (!top)
				return std::nullopt;
			return TentativeSplit{ channel, top->region, top->cut, top->delta_j };
		}

		// One iteration under the current strategies. Returns no events once
		// converged or stalled.
		std::vector<SplitEvent> step()
		{
			std::vector<SplitEvent> events = mode_ == Mode::Vector ? step_vector() : step_multiscalar();
			if (!events.empty())
			{
				steps_.push_back(core_.config);
				history_.insert(history_.end(), events.begin(), events.end());
				if (core_.iteration % SnapshotInterval == 0)
					snapshots_.emplace(core_.iteration, core_);
			}
			return events;
		}

		std::vector<SplitEvent> step(CuttingStrategy cutting, MultiscalarStrategy multiscalar)
		{
			set_strategies(cutting, multiscalar);
			return step();
		}

		RunResult run(StopCriterion const& stop)
		{
			if (!stop.any())
				throw ConfigError("at least one stop criterion is required");
			RunResult result;
			for (;;)
			{
				if (criterion_met(stop))
				{
					result.status = Status::CriterionMet;
					return result;
				}
				auto events = step();
				if (events.empty())
				{
					result.status = core_.status;
					return result;
				}
				result.events.insert(result.events.end(), events.begin(), events.end());
			}
		}

		bool criterion_met(StopCriterion const& stop) const
		{
			return (stop.target_vector_regions && n_vr() >= *stop.target_vector_regions) ||
				(stop.target_scalar_regions && n_sr() >= *stop.target_scalar_regions) ||
				(stop.target_tau && tau() >= *stop.target_tau) ||
				(stop.max_iterations && core_.iteration >= *stop.max_iterations) ||
				(stop.j_epsilon && j() <= *stop.j_epsilon);
		}

		// Reverts the last committed iteration by replaying from the nearest snapshot.
		void undo()
		{
			if (core_.iteration == 0)
				throw StateError("nothing to undo");
			std::size_t const target = core_.iteration - 1;
			snapshots_.erase(snapshots_.upper_bound(target), snapshots_.end());
			auto const& [base, snapshot] = *snapshots_.rbegin();
			std::vector<EngineConfig> const replay(steps_.begin() + static_cast<std::ptrdiff_t>(base),
				steps_.begin() + static_cast<std::ptrdiff_t>(target));
			core_ = snapshot;
			steps_.resize(base);
			std::erase_if(history_, [base](SplitEvent const& e) { return e.iteration > base; });
			for (auto const& cfg : replay)
				if (step(cfg.cutting, cfg.multiscalar).empty())
					throw StateError("replay diverged during undo");
		}

	private:
		struct Core
		{
			EngineConfig config;
			std::vector<Partition> partitions;
			std::vector<detail::CandidateCache> caches;
			std::vector<detail::CompensatedSum> j;
			std::unordered_map<std::array<RegionId, MaxChannels>, std::size_t, detail::TupleHash> tuples;
			std::size_t iteration = 0;
			Status status = Status::Running;
		};

		bool tracks_tuples() const { return mode_ == Mode::Multiscalar && image_->channels() > 1; }

		std::array<RegionId, MaxChannels> tuple_of(std::size_t pixel) const
		{
			std::array<RegionId, MaxChannels> t{};
			for (std::size_t p = 0; p < core_.partitions.size(); ++p)
				t[p] = core_.partitions[p].label(pixel);
			return t;
		}

		double tau_for(double j) const
		{
			double const misfit = std::sqrt(2.0 * std::max(j, 0.0));
			if (norm_d2_ == 0.0)
				return misfit == 0.0 ? 100.0 : 0.0;
			return std::clamp(100.0 * (1.0 - misfit / std::sqrt(norm_d2_)), 0.0, 100.0);
		}

		double recompute_j(std::size_t p) const
		{
			double total = 0.0;
			auto const channels = scored_channels(p);
			for (RegionId id : core_.partitions[p].region_ids())
				total += region_misfit(core_.partitions[p].stats(id), channels);
			return total;
		}

		void evaluate(std::size_t p, RegionId id)
		{
			auto cand = best_cut(*image_, core_.partitions[p], id, core_.config.cutting, scored_channels(p));
			core_.partitions[p].set_splittable(id, cand.splittable);
			core_.caches[p].insert(std::move(cand));
		}

		void rebuild_caches()
		{
			for (std::size_t p = 0; p < core_.partitions.size(); ++p)
			{
				core_.caches[p] = {};
				for (RegionId id : core_.partitions[p].region_ids())
					evaluate(p, id);
			}
		}

		void refresh_status()
		{
			for (auto const& c : core_.caches)
				if (!c.ranking.empty())
				{
					core_.status = Status::Running;
					return;
				}
			bool all_constant = true;
			for (std::size_t p = 0; p < core_.partitions.size(); ++p)
				for (RegionId id : core_.partitions[p].region_ids())
					all_constant = all_constant && core_.partitions[p].stats(id).constant(scored_channels(p));
			core_.status = all_constant ? Status::Converged : Status::Stalled;
			if (all_constant)
				for (std::size_t p = 0; p < core_.partitions.size(); ++p)
					core_.j[p].reset(recompute_j(p));
		}

		// Splits region `id` of partition p into the given cells; keeps caches and tuple counts current.
		std::vector<RegionId> apply_cells(std::size_t p, RegionId id, std::span<std::uint8_t const> cells)
		{
			Partition& part = core_.partitions[p];
			std::vector<std::uint32_t> const pixels = tracks_tuples() ? part.region(id).pixels
																	   : std::vector<std::uint32_t>{};
			for (auto i : pixels)
			{
				auto it = core_.tuples.find(tuple_of(i));
				if (--it->second == 0)
					core_.tuples.erase(it);
			}
			auto children = part.split_cells(id, cells, *image_);
			for (auto i : pixels)
				++core_.tuples[tuple_of(i)];
			core_.caches[p].erase(id);
			for (RegionId c : children)
				evaluate(p, c);
			return children;
		}

		std::vector<RegionId> apply_cut(std::size_t p, RegionId id, Cutting const& cut)
		{
			auto const plus = core_.partitions[p].side_mask(id, cut, *image_);
			std::vector<std::uint8_t> cells(plus.size());
			for (std::size_t j = 0; j < plus.size(); ++j)
				cells[j] = plus[j] ? 0 : 1;
			return apply_cells(p, id, cells);
		}

		SplitEvent make_event(ChannelSet channels, RegionId region, std::vector<Cutting> cuts,
			std::vector<RegionId> children, double delta_j) const
		{
			SplitEvent e;
			e.iteration = core_.iteration;
			e.channels = channels;
			e.region = region;
			e.cuts = std::move(cuts);
			e.children = std::move(children);
			e.delta_j = delta_j;
			e.n_sr = n_sr();
			e.n_vr = n_vr();
			e.j = j();
			e.tau = tau();
			e.cutting = core_.config.cutting;
			e.multiscalar = core_.config.multiscalar;
			return e;
		}

		// Commits the cached best split of partition p; returns its event.
		SplitEvent commit_best(std::size_t p, ChannelSet channels)
		{
			CandidateSplit const cand = *core_.caches[p].top();
			auto children = apply_cut(p, cand.region, cand.cut);
			core_.j[p].add(-cand.delta_j);
			return make_event(channels, cand.region, { cand.cut }, std::move(children), cand.delta_j);
		}

		std::vector<SplitEvent> step_vector()
		{
			if (!core_.caches[0].top())
			{
				refresh_status();
				return {};
			}
			++core_.iteration;
			std::vector<SplitEvent> events{ commit_best(0, image_->all_channels()) };
			refresh_status();
			events.back().j = j();
			events.back().tau = tau();
			return events;
		}

		std::vector<SplitEvent> step_multiscalar()
		{
			int const channels = static_cast<int>(core_.partitions.size());
			std::array<std::optional<TentativeSplit>, MaxChannels> tent;
			bool any = false;
			for (int k = 0; k < channels; ++k)
			{
				tent[k] = tentative(k);
				any = any || tent[k].has_value();
			}
			if (!any)
			{
				refresh_status();
				return {};
			}

			std::vector<SplitEvent> events;
			auto const strategy = channels == 1 ? MultiscalarStrategy::BestComponentOnly : core_.config.multiscalar;
			if (strategy == MultiscalarStrategy::CombineBestComponents)
			{
				if (!partitions_coincide())
					throw StateError("combine-best-components requires coinciding channel partitions");
				++core_.iteration;
				events = commit_combined(tent);
			}
			else if (strategy == MultiscalarStrategy::BestComponentForEach)
			{
				++core_.iteration;
				for (int k = 0; k < channels; ++k)
					if (tent[k])
						events.push_back(commit_best(static_cast<std::size_t>(k), ChannelSet::single(k)));
			}
			else
			{
				int best = -1;
				for (int k = 0; k < channels; ++k)
					if (tent[k] && (best < 0 || tent[k]->delta_j > tent[best]->delta_j))
						best = k;
				++core_.iteration;
				events.push_back(commit_best(static_cast<std::size_t>(best), ChannelSet::single(best)));
			}
			refresh_status();
			events.back().j = j();
			events.back().tau = tau();
			return events;
		}

		// Applies every channel's tentative cut to all channels: the affected regions are
		// replaced by the non-empty intersections of the cuts' sides.
		std::vector<SplitEvent> commit_combined(std::array<std::optional<TentativeSplit>, MaxChannels> const& tent)
		{
			int const channels = static_cast<int>(core_.partitions.size());
			Partition const& common = core_.partitions[0];
			// Common region -> cutting channels, ascending.
			std::map<RegionId, std::vector<int>> targets;
			for (int k = 0; k < channels; ++k)
				if (tent[k])
				{
					auto const first_pixel = core_.partitions[k].region(tent[k]->region).pixels.front();
					targets[common.label(first_pixel)].push_back(k);
				}

			std::vector<SplitEvent> events;
			for (auto const& [parent, cutters] : targets)
			{
				auto const first_pixel = core_.partitions[0].region(parent).pixels.front();
				std::size_t const size = core_.partitions[0].region(parent).pixels.size();
				std::vector<std::uint8_t> cells(size, 0);
				ChannelSet set;
				std::vector<Cutting> cuts;
				for (std::size_t b = 0; b < cutters.size(); ++b)
				{
					int const k = cutters[b];
					RegionId const rk = core_.partitions[k].label(first_pixel);
					auto const plus = core_.partitions[k].side_mask(rk, tent[k]->cut, *image_);
					for (std::size_t j = 0; j < size; ++j)
						cells[j] |= static_cast<std::uint8_t>(plus[j] ? 0 : 1u << b);
					set = set.with(k);
					cuts.push_back(tent[k]->cut);
				}

				double total = 0.0;
				std::vector<RegionId> children0;
				for (int k = 0; k < channels; ++k)
				{
					RegionId const rk = core_.partitions[k].label(first_pixel);
					RegionStats const parent_stats = core_.partitions[k].stats(rk);
					auto children = apply_cells(static_cast<std::size_t>(k), rk, cells);
					// Decrease of J^k: half the count-weighted squared deviation of child means.
					double const m = region_mean(parent_stats, k);
					double dj = 0.0;
					for (RegionId c : children)
					{
						auto const& cs = core_.partitions[k].stats(c);
						double const diff = region_mean(cs, k) - m;
						dj += 0.5 * static_cast<double>(cs.pixel_count) * diff * diff;
					}
					core_.j[k].add(-dj);
					total += dj;
					if (k == 0)
						children0 = std::move(children);
				}
				events.push_back(make_event(set, parent, std::move(cuts), std::move(children0), total));
			}
			return events;
		}

		std::shared_ptr<ImageBuffer const> image_;
		Mode mode_;
		double norm_d2_ = 0.0;
		Core core_;
		std::vector<SplitEvent> history_;
		std::vector<EngineConfig> steps_;
		std::map<std::size_t, Core> snapshots_;
	};
}
