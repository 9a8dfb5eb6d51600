#include <thread>

#include <gtest/gtest.h>

#include "envdt/bridge.hpp"
#include "support.hpp"

using namespace envdt;
using namespace std::chrono_literals;
using envdt::testing::fixture;

namespace {

SignalEnvelope envelope(std::string run, std::uint64_t seq, std::string signal = "LowBattery") {
  SignalEnvelope e;
  e.run_id = std::move(run);
  e.seq = seq;
  e.trace_seq = seq * 3;
  e.machine = "BatteryStateMachine";
  e.signal = std::move(signal);
  if (auto lib = library_signal_from_string(e.signal)) e.category = library_category(*lib);
  e.instance = "Battery#1";
  e.t_ms = static_cast<std::int64_t>(seq) * 100;
  return e;
}

std::vector<std::uint64_t> log_seqs(const TwinStubState& s) {
  std::vector<std::uint64_t> out;
  for (const auto& e : s.log) out.push_back(e.seq);
  return out;
}

std::vector<std::uint64_t> one_to(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t i = 1; i <= n; ++i) out.push_back(i);
  return out;
}

RetryPolicy quick_policy() { return RetryPolicy{12, 1ms, 20ms}; }

}  // namespace

TEST(Wire, EnvelopeRoundTrips) {
  auto e = envelope("karie-uniform-r01", 7);
  e.payload = {{"Battery#1.level", Value{42.5}}, {"Device#1.volume", Value{std::int64_t{3}}},
               {"Camera#1.recognized", Value{true}}, {"UserInterface#1.language", Value{std::string("Dutch")}}};
  auto line = to_wire(e);
  EXPECT_EQ(line.rfind("{\"v\":\"v1\"", 0), 0u) << line;
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(envelope_from_wire(line), e);
}

TEST(Wire, AckLineNamesRunAndSeq) {
  auto ack = ack_line("r", 12);
  EXPECT_NE(ack.find("\"runId\":\"r\""), std::string::npos);
  EXPECT_NE(ack.find("\"seq\":12"), std::string::npos);
}

TEST(Stub, ErrorSignalsDegradeTheLabel) {
  auto s = twin_stub_apply({}, envelope("r", 1, "NoConnection"));
  EXPECT_EQ(s.label, "disconnected");
  ASSERT_EQ(s.log.size(), 1u);
  EXPECT_EQ(s.log[0].signal, "NoConnection");
}

TEST(Stub, FullBatteryMirrorsHundred) {
  auto s = twin_stub_apply({}, envelope("r", 1, "FullBattery"));
  EXPECT_EQ(s.mirror.at("battery"), Value{100.0});
  s = twin_stub_apply(s, envelope("r", 2, "LowBattery"));
  EXPECT_LT(as_double(s.mirror.at("battery")), 100.0);
}

TEST(Stub, UnknownInteractionsRecordedVerbatim) {
  auto e = envelope("r", 1, "ButtonHeld");
  e.category = SignalCategory::Info;
  auto s = twin_stub_apply({}, e);
  EXPECT_EQ(s.log.back().signal, "ButtonHeld");
  EXPECT_EQ(s.mirror.at("last_interaction"), Value{std::string("ButtonHeld")});
}

TEST(Stub, PureFoldOverTheLog) {
  std::vector<SignalEnvelope> es;
  const char* names[] = {"FullBattery", "WeakConnection", "CartridgeEmpty", "NoPower", "ConnectionChanged"};
  for (std::uint64_t i = 1; i <= 5; ++i) es.push_back(envelope("r", i, names[i - 1]));
  TwinStubState a, b;
  for (const auto& e : es) a = twin_stub_apply(a, e);
  for (const auto& e : es) b = twin_stub_apply(b, e);
  EXPECT_EQ(a, b);
  TwinStubState reordered;
  for (auto it = es.rbegin(); it != es.rend(); ++it) reordered = twin_stub_apply(reordered, *it);
  EXPECT_NE(a.label, reordered.label);
}

TEST(Service, DuplicatesAndGapsAreIgnored) {
  TwinService svc;
  for (std::uint64_t seq : {1, 2, 2, 1, 3}) svc.accept(envelope("r", seq));
  EXPECT_EQ(svc.accept(envelope("r", 5)), 3u);
  EXPECT_EQ(svc.accept(envelope("r", 4)), 4u);
  EXPECT_EQ(log_seqs(*svc.state("r")), one_to(4));
  EXPECT_EQ(svc.duplicates(), 2u);
}

TEST(Dispatcher, HundredEnvelopesInOrder) {
  TwinService svc;
  InProcessEndpoint ep(svc);
  Dispatcher d(ep, quick_policy());
  for (std::uint64_t i = 1; i <= 100; ++i) d.submit(envelope("r", i));
  auto receipts = d.flush();
  ASSERT_EQ(receipts.size(), 100u);
  for (std::size_t i = 0; i < receipts.size(); ++i) EXPECT_EQ(receipts[i].seq, i + 1);
  EXPECT_EQ(log_seqs(*svc.state("r")), one_to(100));
}

TEST(Dispatcher, RecoversAfterEndpointOutage) {
  TwinService svc;
  InProcessEndpoint ep(svc);
  Dispatcher d(ep, quick_policy());
  ep.fail_next(3);
  for (std::uint64_t i = 1; i <= 20; ++i) d.submit(envelope("r", i));
  auto receipts = d.flush();
  EXPECT_EQ(receipts.size(), 20u);
  EXPECT_EQ(receipts.front().attempts, 4);
  EXPECT_EQ(log_seqs(*svc.state("r")), one_to(20));
}

TEST(Dispatcher, LostAcksAreDeduplicated) {
  TwinService svc;
  InProcessEndpoint ep(svc);
  Dispatcher d(ep, quick_policy());
  ep.drop_acks(5);
  for (std::uint64_t i = 1; i <= 10; ++i) d.submit(envelope("r", i));
  d.flush();
  EXPECT_EQ(log_seqs(*svc.state("r")), one_to(10));
  EXPECT_EQ(svc.duplicates(), 5u);
}

TEST(Dispatcher, ExhaustedBudgetThrows) {
  TwinService svc;
  InProcessEndpoint ep(svc);
  Dispatcher d(ep, RetryPolicy{2, 1ms, 2ms});
  ep.fail_next(100);
  d.submit(envelope("r", 1));
  EXPECT_THROW(d.flush(), EndpointUnavailable);
}

TEST(Dispatcher, SinkNumbersEachRunFromOne) {
  TwinService svc;
  InProcessEndpoint ep(svc);
  Dispatcher d(ep, quick_policy());
  auto sink = d.sink();
  for (const char* run_id : {"a", "b"}) {
    for (int i = 0; i < 4; ++i) {
      SignalEvent ev;
      ev.run_id = run_id;
      ev.seq = static_cast<std::uint64_t>(10 + i);
      ev.machine = "M";
      ev.signal = SignalKind::library(SignalName::FullBattery);
      sink(ev);
    }
  }
  d.flush();
  EXPECT_EQ(log_seqs(*svc.state("a")), one_to(4));
  EXPECT_EQ(log_seqs(*svc.state("b")), one_to(4));
}

TEST(Dispatcher, KarieRunLogMatchesTraceEvents) {
  TwinService svc;
  InProcessEndpoint ep(svc);
  Dispatcher d(ep, quick_policy());
  const auto& m = fixture("karie");
  SimulationConfig cfg;
  cfg.seed = 4;
  cfg.once_only = true;
  cfg.run_id = "karie-run";
  cfg.params = param_table(m);
  auto r = run(m, instantiate(m, cfg.seed, cfg.params), cfg, d.sink());
  d.flush();
  std::vector<std::string> trace_signals, log_signals;
  for (const auto& rec : r.trace.records) {
    if (is_signal_kind(rec.kind)) trace_signals.push_back(rec.detail);
  }
  auto stub = svc.state("karie-run");
  ASSERT_TRUE(stub);
  for (const auto& e : stub->log) log_signals.push_back(e.signal);
  std::sort(trace_signals.begin(), trace_signals.end());
  std::sort(log_signals.begin(), log_signals.end());
  EXPECT_FALSE(trace_signals.empty());
  EXPECT_EQ(trace_signals, log_signals);
}

TEST(Tcp, DeliversAcrossServerRestart) {
  TwinService svc;
  auto server = std::make_unique<TwinServer>(svc, 0);
  const int port = server->port();
  auto ep = TcpEndpoint::from_uri("tcp://127.0.0.1:" + std::to_string(port));
  Dispatcher d(*ep, RetryPolicy{20, 5ms, 100ms});
  for (std::uint64_t i = 1; i <= 30; ++i) d.submit(envelope("tcp-run", i));
  d.flush();
  server->stop();
  server.reset();
  for (std::uint64_t i = 31; i <= 60; ++i) d.submit(envelope("tcp-run", i));
  std::this_thread::sleep_for(50ms);
  server = std::make_unique<TwinServer>(svc, port);
  auto receipts = d.flush();
  EXPECT_EQ(receipts.size(), 30u);
  EXPECT_EQ(log_seqs(*svc.state("tcp-run")), one_to(60));
}

TEST(Tcp, BadUriRejected) {
  EXPECT_THROW(TcpEndpoint::from_uri("udp://localhost:1"), std::invalid_argument);
}
