#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <vector>

#include "splitids/acquire.hpp"
#include "splitids/aho_corasick.hpp"
#include "splitids/alert.hpp"
#include "splitids/clock.hpp"
#include "splitids/detect.hpp"
#include "splitids/packet.hpp"
#include "splitids/ring.hpp"
#include "splitids/rules.hpp"
#include "splitids/ruleset.hpp"
#include "splitids/workload.hpp"

namespace {

using namespace splitids;

const std::string kCorpus = std::string(SPLITIDS_TEST_DATA_DIR) + "/community_sample.rules";

void BM_RingEnqueueDequeue(benchmark::State& state) {
  Ring<std::uint64_t> ring(4096, static_cast<RingDiscipline>(state.range(0)));
  std::uint64_t v = 0;
  for (auto _ : state) {
    ring.try_enqueue(v++);
    benchmark::DoNotOptimize(ring.try_dequeue());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RingEnqueueDequeue)->Arg(0)->Arg(1);

void BM_RssHash(benchmark::State& state) {
  FiveTuple t{Proto::Tcp, Ipv4Address::from_octets(10, 0, 0, 1),
              Ipv4Address::from_octets(10, 0, 0, 2), 1234, 80};
  for (auto _ : state) {
    benchmark::DoNotOptimize(rss_hash(t));
    ++t.src_port;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RssHash);

void BM_Decode(benchmark::State& state) {
  WorkloadSpec spec;
  spec.packet_size = static_cast<std::size_t>(state.range(0));
  spec.n_flows = 16;
  spec.packet_count = 256;
  const FrameList frames = materialize(spec);
  PacketPool pool(16);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto r = decode(frames[i++ % frames.size()], 0, pool);
    if (r.holds_slot()) pool.release(r.descriptor.slot);
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Decode)->Arg(64)->Arg(1024);

void BM_AhoCorasickScan(benchmark::State& state) {
  const auto rules = load_ruleset_file(kCorpus).ruleset;
  std::vector<std::vector<std::uint8_t>> patterns;
  for (const auto& rule : rules.rules) {
    for (const auto& o : rule.options) {
      if (const auto* c = std::get_if<ContentOption>(&o)) patterns.push_back(c->pattern);
    }
  }
  const AhoCorasick ac(patterns);
  std::mt19937_64 rng(1);
  std::vector<std::uint8_t> text(static_cast<std::size_t>(state.range(0)));
  for (auto& b : text) b = static_cast<std::uint8_t>('a' + rng() % 26);
  std::uint64_t hits = 0;
  for (auto _ : state) {
    ac.scan(text, [&](std::uint32_t) { ++hits; });
  }
  benchmark::DoNotOptimize(hits);
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AhoCorasickScan)->Arg(64)->Arg(1500);

void BM_ProcessPacket(benchmark::State& state) {
  const CompiledRuleSet rules(load_ruleset_file(kCorpus).ruleset.take_first(100));
  WorkloadSpec spec;
  spec.packet_size = static_cast<std::size_t>(state.range(0));
  spec.n_flows = 256;
  spec.packet_count = 4096;
  const FrameList frames = materialize(spec);
  PacketPool pool(16);
  auto clock = ClockSource::simulated(kDefaultCpuFreq);
  NullAlertSink alerts;
  AnalysisWorker worker(rules, pool, clock, alerts, nullptr);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto r = decode(frames[i++ % frames.size()], 0, pool);
    if (r.status != DecodeStatus::Ok) {
      if (r.holds_slot()) pool.release(r.descriptor.slot);
      continue;
    }
    benchmark::DoNotOptimize(worker.process_packet(r.descriptor.slot));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ProcessPacket)->Arg(64)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
