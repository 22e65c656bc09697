#include "splitids/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "splitids/dataplane.hpp"
#include "splitids/detect.hpp"
#include "splitids/ruleset.hpp"

namespace splitids {

namespace {

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct LoadedRules {
  RuleSet rules;
  std::size_t errors = 0;
  std::size_t opaque = 0;
};

LoadedRules load_rules(const EngineConfig& engine) {
  LoadedRules out;
  if (engine.rules) {
    out.rules = *engine.rules;
    for (const auto& r : out.rules.rules) out.opaque += r.opaque_count();
  } else if (!engine.rules_path.empty()) {
    auto loaded = load_ruleset_file(engine.rules_path);
    out.rules = std::move(loaded.ruleset);
    out.errors = loaded.errors.size();
    out.opaque = loaded.opaque_options;
  }
  if (engine.take_first) out.rules = out.rules.take_first(*engine.take_first);
  return out;
}

void validate(const ExperimentConfig& c) {
  c.workload.validate();
  c.engine.cost.validate();
  if (c.engine.n_workers == 0) throw ConfigError("at least one analysis worker is required");
  if (c.engine.n_acquire_threads == 0) throw ConfigError("at least one acquisition thread is required");
  if (c.engine.burst_size == 0) throw ConfigError("burst size must be at least 1");
  if (!is_power_of_two(c.engine.ring_capacity)) {
    throw ConfigError("ring capacity must be a power of two");
  }
  if (!(c.run.interval_s > 0.0)) throw ConfigError("interval must be positive");
  if (!(c.run.duration_s >= 0.0)) throw ConfigError("duration must be non-negative");
  if (c.run.mode == RunMode::Simulated) {
    if (!(c.run.rate_pps > 0.0) && !(c.run.line_rate_bps > 0.0)) {
      throw ConfigError("simulated runs need a positive line rate or packet rate");
    }
    if (c.engine.n_acquire_threads != 1) {
      throw ConfigError("simulated runs use exactly one acquisition thread");
    }
  }
}

std::vector<std::pair<std::string, std::string>> echo(const ExperimentConfig& c,
                                                      const LoadedRules& rules) {
  const auto& w = c.workload;
  const auto& e = c.engine;
  std::vector<std::pair<std::string, std::string>> out;
  auto add = [&](std::string k, std::string v) { out.emplace_back(std::move(k), std::move(v)); };
  add("mode", c.run.mode == RunMode::Simulated ? "simulated" : "real");
  switch (w.kind) {
    case WorkloadSpec::Kind::Synth:
      add("workload", "synth " + std::to_string(w.packet_size) + "B " +
                          std::to_string(w.n_flows) + " flows");
      break;
    case WorkloadSpec::Kind::Pcap:
      add("workload", "pcap " + w.pcap_path);
      break;
    case WorkloadSpec::Kind::Memory:
      add("workload", "memory");
      break;
  }
  add("packet_count", std::to_string(w.packet_count));
  add("seed", std::to_string(w.seed));
  add("workers", std::to_string(e.n_workers));
  add("acquire_threads", std::to_string(e.n_acquire_threads));
  add("ring_capacity", std::to_string(e.ring_capacity));
  add("inline", e.inline_mode ? "true" : "false");
  add("useless", e.useless_mode ? "true" : "false");
  add("rules", std::to_string(rules.rules.size()));
  add("cost_model", describe(e.cost));
  if (c.run.mode == RunMode::Simulated) {
    add("offered", c.run.rate_pps > 0.0 ? format_number(c.run.rate_pps) + " pps"
                                        : format_number(c.run.line_rate_bps) + " bps");
  }
  add("duration_s", c.run.duration_s > 0.0 ? format_number(c.run.duration_s) : "unbounded");
  return out;
}

class IntervalSeries {
 public:
  explicit IntervalSeries(double width_s) : width_(width_s) {}

  struct Bucket {
    std::uint64_t received = 0, analyzed = 0, dropped = 0;
    double busy = 0.0, extra = 0.0;
  };

  Bucket& at(double t_s) {
    const auto i = static_cast<std::size_t>(std::max(0.0, t_s) / width_);
    if (buckets_.size() <= i) buckets_.resize(i + 1);
    return buckets_[i];
  }

  std::vector<IntervalRecord> finish(double duration_s) const {
    std::size_t n = duration_s > 0.0 ? static_cast<std::size_t>(std::ceil(duration_s / width_ - 1e-9)) : 0;
    n = std::max<std::size_t>(n, duration_s > 0.0 ? 1 : 0);
    std::vector<Bucket> merged(n);
    for (std::size_t i = 0; i < buckets_.size() && n > 0; ++i) {
      Bucket& m = merged[std::min(i, n - 1)];
      m.received += buckets_[i].received;
      m.analyzed += buckets_[i].analyzed;
      m.dropped += buckets_[i].dropped;
      m.busy += buckets_[i].busy;
      m.extra += buckets_[i].extra;
    }
    std::vector<IntervalRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
      const Bucket& b = merged[i];
      IntervalRecord r;
      r.start_s = static_cast<double>(i) * width_;
      r.end_s = std::min(static_cast<double>(i + 1) * width_, duration_s);
      r.received = b.received;
      r.analyzed = b.analyzed;
      r.dropped = b.dropped;
      r.drop_rate_pct = b.received ? 100.0 * static_cast<double>(b.dropped) / static_cast<double>(b.received) : 0.0;
      r.paging_activity_pct = b.busy > 0.0 ? std::clamp(100.0 * b.extra / b.busy, 0.0, 100.0) : 0.0;
      out.push_back(r);
    }
    return out;
  }

 private:
  double width_;
  std::vector<Bucket> buckets_;
};

struct Pipeline {
  LoadedRules loaded;
  CompiledRuleSet compiled;
  Dataplane dataplane;
  NullAlertSink null_alerts;

  explicit Pipeline(const ExperimentConfig& c)
      : loaded(load_rules(c.engine)),
        compiled(loaded.rules, c.engine.vars),
        dataplane(DataplaneConfig{c.engine.n_workers, c.engine.ring_capacity,
                                  c.engine.pool_capacity, c.engine.cost.crossing_cost_us}) {}

  std::vector<std::unique_ptr<AnalysisWorker>> make_workers(const ExperimentConfig& c,
                                                            const ClockSource& clock) {
    std::vector<std::unique_ptr<AnalysisWorker>> workers;
    AlertSink& sink = c.alerts ? *c.alerts : null_alerts;
    WorkerConfig wc{.inline_mode = c.engine.inline_mode,
                    .useless_mode = c.engine.useless_mode,
                    .flows = c.engine.flows};
    for (std::size_t i = 0; i < c.engine.n_workers; ++i) {
      workers.push_back(std::make_unique<AnalysisWorker>(compiled, dataplane.pool(), clock, sink,
                                                         &dataplane.tx(), wc));
    }
    return workers;
  }
};

std::size_t flow_footprint(const std::vector<std::unique_ptr<AnalysisWorker>>& workers) {
  std::size_t total = 0;
  for (const auto& w : workers) total += w->stats().footprint_bytes.get();
  return total;
}

void fill_totals(Report& report, const std::vector<const AcquireStats*>& acq,
                 const std::vector<std::unique_ptr<AnalysisWorker>>& workers) {
  auto& t = report.totals;
  for (const auto* a : acq) {
    t.received += a->received.get();
    t.ring_full += a->dropped.get();
    t.pool_exhausted += a->pool_exhausted.get();
    t.decode_failed += a->decode_failed.get();
    t.unsupported_l3 += a->unsupported_l3.get();
    t.tx_sent += a->tx_sent.get();
    t.received_bytes += a->received_bytes.get();
  }
  t.dropped = t.ring_full + t.pool_exhausted + t.decode_failed + t.unsupported_l3;
  for (const auto& w : workers) {
    const auto& s = w->stats();
    t.analyzed += s.analyzed.get();
    t.analyzed_bytes += s.analyzed_bytes.get();
    t.allowed += s.allowed.get();
    t.blocked += s.blocked.get();
    t.alerts += s.alerts.get();
    t.flows_created += s.flows_created.get();
    t.flowless += s.flowless.get();
    t.candidates += s.candidates.get();
  }
  if (report.duration_s > 0.0) {
    report.throughput_pps = static_cast<double>(t.analyzed) / report.duration_s;
    report.throughput_bps = static_cast<double>(t.analyzed_bytes) * 8.0 / report.duration_s;
  }
  if (t.analyzed > 0) {
    report.mean_frame_bytes = static_cast<double>(t.analyzed_bytes) / static_cast<double>(t.analyzed);
  }
}

Report run_simulated(const ExperimentConfig& c) {
  Pipeline p(c);
  Report report;
  report.mode = RunMode::Simulated;
  report.config = echo(c, p.loaded);
  report.rules_loaded = p.loaded.rules.size();
  report.rule_errors = p.loaded.errors;
  report.opaque_options = p.loaded.opaque;

  const CostModel& cost = c.engine.cost;
  const SimCosts& k = c.run.costs;
  const std::size_t n_rules = p.compiled.size();
  ClockSource clock = ClockSource::simulated(c.engine.cpufreq);

  Dataplane& dp = p.dataplane;
  dp.initialize();
  dp.start_device();
  Acquirer acq(DispatchConfig{c.engine.n_workers, 1, c.engine.burst_size, c.engine.inline_mode},
               dp.pool(), dp.rx_rings(), &dp.tx(), dp.lifecycle(), clock);
  auto workers = p.make_workers(c, clock);
  auto source = std::move(make_sources(c.workload, 1).front());
  dp.acquire();

  const std::size_t n = workers.size();
  std::vector<double> busy_until(n, 0.0);  // ns
  IntervalSeries series(c.run.interval_s);
  const double limit_ns = c.run.duration_s > 0.0 ? c.run.duration_s * 1e9 : INFINITY;

  FrameView frame;
  bool have_frame = source->next(frame);
  double t_arrival = 0.0;
  double last_arrival = 0.0;
  double last_completion = 0.0;

  auto advance_clock = [&](double t_ns) {
    clock.advance_to_us(static_cast<std::uint64_t>(t_ns / 1000.0));
  };

  for (;;) {
    std::size_t next_worker = n;
    for (std::size_t w = 0; w < n; ++w) {
      if (dp.rx(w).empty()) continue;
      if (next_worker == n || busy_until[w] < busy_until[next_worker]) next_worker = w;
    }
    const bool arrival_pending = have_frame && t_arrival < limit_ns;
    if (arrival_pending && (next_worker == n || t_arrival < busy_until[next_worker])) {
      advance_clock(t_arrival);
      std::size_t ring = 0;
      const IngestOutcome outcome = acq.ingest(frame.bytes, clock.gettime_us(), &ring);
      auto& bucket = series.at(t_arrival / 1e9);
      ++bucket.received;
      if (outcome == IngestOutcome::Enqueued) {
        if (dp.rx(ring).size() == 1) busy_until[ring] = std::max(busy_until[ring], t_arrival);
      } else {
        ++bucket.dropped;
      }
      last_arrival = t_arrival;
      const double bits = static_cast<double>(frame.bytes.size() + 20) * 8.0;
      t_arrival += c.run.rate_pps > 0.0 ? 1e9 / c.run.rate_pps : bits / c.run.line_rate_bps * 1e9;
      have_frame = source->next(frame);
    } else if (next_worker != n) {
      const std::size_t w = next_worker;
      const double start = busy_until[w];
      advance_clock(start);
      const SlotId slot = *dp.rx(w).try_dequeue();
      const std::size_t frame_len = dp.pool().descriptor(slot).frame_len;
      const ProcessResult r = workers[w]->process_packet(slot);

      double base = k.useless_ns;
      if (!c.engine.useless_mode) {
        base = k.base_ns + k.per_byte_ns * static_cast<double>(frame_len) +
               k.per_candidate_ns * r.candidates + k.per_alert_ns * r.alerts +
               (r.flow_created ? k.flow_create_ns : 0.0);
      }
      const std::size_t footprint = trusted_footprint_bytes(cost, flow_footprint(workers), n_rules);
      const double pf = paging_factor(cost, footprint);
      const double wf = warmup_factor(cost, start / 1e9);
      const double service = base * pf * wf;
      report.peak_footprint_bytes = std::max(report.peak_footprint_bytes, footprint);
      report.max_paging_factor = std::max(report.max_paging_factor, pf);

      busy_until[w] = start + service;
      last_completion = std::max(last_completion, busy_until[w]);
      auto& started = series.at(start / 1e9);
      started.busy += service;
      started.extra += service - base;
      ++series.at(busy_until[w] / 1e9).analyzed;
      acq.drain_tx(c.tx_sink);
    } else {
      break;
    }
  }

  dp.stop();
  acq.drain_tx(c.tx_sink);
  report.duration_s = std::max(last_arrival, last_completion) / 1e9;
  report.intervals = series.finish(report.duration_s);
  fill_totals(report, {&acq.stats()}, workers);
  workers.clear();
  dp.shutdown();
  report.leaked_slots = dp.leaked_slots();
  report.lifecycle_crossings = dp.lifecycle().crossings();
  return report;
}

/// Serialises concurrent writers onto a sink that expects one.
class LockedSink final : public PacketSink {
 public:
  explicit LockedSink(PacketSink* inner) : inner_(inner) {}
  void write(std::span<const std::uint8_t> frame) override {
    std::lock_guard lock(mutex_);
    inner_->write(frame);
  }

 private:
  PacketSink* inner_;
  std::mutex mutex_;
};

Report run_real(const ExperimentConfig& c) {
  using Clock = std::chrono::steady_clock;
  Pipeline p(c);
  Report report;
  report.mode = RunMode::Real;
  report.config = echo(c, p.loaded);
  report.rules_loaded = p.loaded.rules.size();
  report.rule_errors = p.loaded.errors;
  report.opaque_options = p.loaded.opaque;

  const CostModel& cost = c.engine.cost;
  const std::size_t n_rules = p.compiled.size();
  ClockSource clock(c.engine.cpufreq, ClockMode::Counter);
  clock.start();

  Dataplane& dp = p.dataplane;
  dp.initialize();
  dp.start_device();
  const std::size_t m = c.engine.n_acquire_threads;
  auto sources = make_sources(c.workload, m);
  std::vector<std::unique_ptr<Acquirer>> acquirers;
  for (std::size_t i = 0; i < m; ++i) {
    acquirers.push_back(std::make_unique<Acquirer>(
        DispatchConfig{c.engine.n_workers, m, c.engine.burst_size, c.engine.inline_mode},
        dp.pool(), dp.rx_rings(), &dp.tx(), dp.lifecycle(), clock));
  }
  auto workers = p.make_workers(c, clock);
  std::unique_ptr<LockedSink> locked;
  PacketSink* sink = nullptr;
  if (c.tx_sink != nullptr) {
    locked = std::make_unique<LockedSink>(c.tx_sink);
    sink = locked.get();
  }

  struct WorkerTiming {
    RelaxedCounter busy_ns;
    RelaxedCounter extra_ns;
  };
  std::vector<WorkerTiming> timing(workers.size());
  std::atomic<std::size_t> exhausted{0};
  std::atomic<bool> workers_stop{false};

  dp.acquire();
  const auto t0 = Clock::now();
  auto elapsed_s = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  std::vector<std::thread> acquire_threads;
  for (std::size_t i = 0; i < m; ++i) {
    acquire_threads.emplace_back([&, i] {
      for (;;) {
        const StepResult r = acquirers[i]->step(*sources[i], sink);
        if (r.status == StepStatus::NotRunning) return;
        if (r.status == StepStatus::SourceExhausted) {
          exhausted.fetch_add(1);
          return;
        }
        if (r.moved == 0) std::this_thread::yield();
      }
    });
  }

  std::vector<std::thread> worker_threads;
  for (std::size_t w = 0; w < workers.size(); ++w) {
    worker_threads.emplace_back([&, w] {
      Ring<SlotId>& rx = dp.rx(w);
      for (;;) {
        const auto start = Clock::now();
        const std::size_t n = workers[w]->poll(rx, c.engine.burst_size);
        if (n == 0) {
          if (workers_stop.load(std::memory_order_acquire) && rx.empty()) return;
          std::this_thread::yield();
          continue;
        }
        const double spent = std::chrono::duration<double, std::nano>(Clock::now() - start).count();
        const double factor =
            paging_factor(cost, trusted_footprint_bytes(cost, flow_footprint(workers), n_rules)) *
            warmup_factor(cost, elapsed_s());
        double extra = 0.0;
        if (factor > 1.0) {
          extra = spent * (factor - 1.0);
          const auto until = Clock::now() + std::chrono::nanoseconds(static_cast<std::int64_t>(extra));
          while (Clock::now() < until) std::this_thread::yield();
        }
        timing[w].busy_ns.add(static_cast<std::uint64_t>(spent + extra));
        timing[w].extra_ns.add(static_cast<std::uint64_t>(extra));
      }
    });
  }

  // Interval sampling on the main thread.
  auto snapshot = [&] {
    IntervalSeries::Bucket b;
    for (const auto& a : acquirers) {
      const auto& s = a->stats();
      b.received += s.received.get();
      b.dropped += s.dropped.get() + s.pool_exhausted.get() + s.decode_failed.get() +
                   s.unsupported_l3.get();
    }
    for (const auto& w : workers) b.analyzed += w->stats().analyzed.get();
    for (const auto& t : timing) {
      b.busy += static_cast<double>(t.busy_ns.get());
      b.extra += static_cast<double>(t.extra_ns.get());
    }
    return b;
  };
  auto idle = [&] {
    if (exhausted.load() < m) return false;
    for (std::size_t w = 0; w < workers.size(); ++w) {
      if (!dp.rx(w).empty()) return false;
    }
    std::uint64_t enq = 0, analyzed = 0;
    for (const auto& a : acquirers) enq += a->stats().enqueued.get();
    for (const auto& w : workers) analyzed += w->stats().analyzed.get();
    return enq == analyzed;
  };

  IntervalSeries::Bucket prev;
  std::vector<IntervalRecord> intervals;
  auto close_interval = [&](double start_s, double end_s) {
    const auto now = snapshot();
    IntervalRecord r;
    r.start_s = start_s;
    r.end_s = end_s;
    r.received = now.received - prev.received;
    r.analyzed = now.analyzed - prev.analyzed;
    r.dropped = now.dropped - prev.dropped;
    r.drop_rate_pct = r.received ? 100.0 * static_cast<double>(r.dropped) / static_cast<double>(r.received) : 0.0;
    const double busy = now.busy - prev.busy;
    r.paging_activity_pct = busy > 0.0 ? std::clamp(100.0 * (now.extra - prev.extra) / busy, 0.0, 100.0) : 0.0;
    intervals.push_back(r);
    prev = now;
  };

  double next_boundary = c.run.interval_s;
  for (;;) {
    const double t = elapsed_s();
    if (t >= next_boundary) {
      close_interval(next_boundary - c.run.interval_s, next_boundary);
      next_boundary += c.run.interval_s;
      continue;
    }
    if (c.run.duration_s > 0.0 && t >= c.run.duration_s) break;
    if (idle()) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }

  dp.stop();
  for (auto& t : acquire_threads) t.join();
  workers_stop.store(true, std::memory_order_release);
  std::atomic<bool> joined{false};
  std::thread joiner([&] {
    for (auto& t : worker_threads) t.join();
    joined.store(true, std::memory_order_release);
  });
  while (!joined.load(std::memory_order_acquire)) {
    acquirers.front()->drain_tx(sink);
    std::this_thread::yield();
  }
  joiner.join();
  acquirers.front()->drain_tx(sink);

  report.duration_s = elapsed_s();
  close_interval(next_boundary - c.run.interval_s, report.duration_s);
  report.intervals = std::move(intervals);
  std::vector<const AcquireStats*> stats;
  for (const auto& a : acquirers) stats.push_back(&a->stats());
  fill_totals(report, stats, workers);
  const std::size_t footprint = trusted_footprint_bytes(cost, flow_footprint(workers), n_rules);
  report.peak_footprint_bytes = footprint;
  report.max_paging_factor = paging_factor(cost, footprint);
  workers.clear();
  dp.shutdown();
  clock.stop();
  report.leaked_slots = dp.leaked_slots();
  report.lifecycle_crossings = dp.lifecycle().crossings();
  return report;
}

}  // namespace

bool Report::conserved() const {
  return totals.received == totals.analyzed + totals.dropped &&
         totals.allowed + totals.blocked == totals.analyzed;
}

Report run_experiment(const ExperimentConfig& config) {
  validate(config);
  return config.run.mode == RunMode::Simulated ? run_simulated(config) : run_real(config);
}

}  // namespace splitids
