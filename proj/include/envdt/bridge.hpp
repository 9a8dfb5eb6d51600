#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "envdt/engine.hpp"
#include "envdt/taxonomy.hpp"

namespace envdt {

/// One signal on the wire. `seq` is 1, 2, 3... per run; `trace_seq` points
/// back at the trace record that produced it.
struct SignalEnvelope {
  std::string run_id;
  std::uint64_t seq = 0;
  std::uint64_t trace_seq = 0;
  std::string machine;
  std::string signal;
  SignalCategory category = SignalCategory::Info;
  std::string instance;
  std::int64_t t_ms = 0;
  std::map<std::string, Value> payload;

  friend bool operator==(const SignalEnvelope&, const SignalEnvelope&) = default;
};

/// Single-line JSON with a leading {"v":"v1", ...} version field.
std::string to_wire(const SignalEnvelope& e);
SignalEnvelope envelope_from_wire(std::string_view line);

std::string ack_line(const std::string& run_id, std::uint64_t seq);

struct StubLogEntry {
  std::uint64_t seq = 0;
  std::string signal;
  std::string machine;

  friend bool operator==(const StubLogEntry&, const StubLogEntry&) = default;
};

struct TwinStubState {
  std::string label = "idle";
  std::map<std::string, Value> mirror;
  std::vector<StubLogEntry> log;

  friend bool operator==(const TwinStubState&, const TwinStubState&) = default;
};

/// Non-normative reaction table of the stand-in twin. Error signals move the
/// label to a degraded value; info and warning signals update the mirror.
TwinStubState twin_stub_apply(TwinStubState state, const SignalEnvelope& e);

/// Receiving side: per-run stub states with (runId, seq) dedup. Only the next
/// contiguous seq is applied; the return value is the cumulative ack.
class TwinService {
 public:
  std::uint64_t accept(const SignalEnvelope& e);
  std::optional<TwinStubState> state(const std::string& run_id) const;
  std::vector<std::string> runs() const;
  std::uint64_t duplicates() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, TwinStubState> states_;
  std::map<std::string, std::uint64_t> acked_;
  std::uint64_t duplicates_ = 0;
};

class EndpointUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Endpoint {
 public:
  virtual ~Endpoint() = default;
  /// Sends one envelope and returns the receiver's cumulative ack seq.
  virtual std::uint64_t deliver(const SignalEnvelope& e) = 0;
  /// Drops any connection state before a retry.
  virtual void reset() {}
};

class InProcessEndpoint : public Endpoint {
 public:
  explicit InProcessEndpoint(TwinService& service) : service_(service) {}

  std::uint64_t deliver(const SignalEnvelope& e) override;

  /// Fault injection: the next `n` deliveries fail.
  void fail_next(int n);
  /// Fault injection: the next `n` deliveries are applied but their ack is
  /// lost, so the sender resends.
  void drop_acks(int n);

 private:
  TwinService& service_;
  std::mutex mu_;
  int fail_ = 0;
  int drop_ = 0;
};

class TcpEndpoint : public Endpoint {
 public:
  TcpEndpoint(std::string host, int port);
  ~TcpEndpoint() override;

  /// Parses "tcp://host:port".
  static std::unique_ptr<TcpEndpoint> from_uri(std::string_view uri);

  std::uint64_t deliver(const SignalEnvelope& e) override;
  void reset() override;

 private:
  void connect_socket();

  std::string host_;
  int port_;
  int fd_ = -1;
  std::string buffer_;
};

struct RetryPolicy {
  int max_retries = 12;
  std::chrono::milliseconds initial{10};
  std::chrono::milliseconds cap{500};
};

struct DeliveryReceipt {
  std::string run_id;
  std::uint64_t seq = 0;
  std::uint64_t ack_seq = 0;
  int attempts = 1;
};

/// Asynchronous stop-and-wait sender. submit() never blocks; a worker thread
/// delivers in FIFO order, retrying with capped exponential backoff.
class Dispatcher {
 public:
  explicit Dispatcher(Endpoint& endpoint, RetryPolicy policy = {});
  ~Dispatcher();

  Dispatcher(const Dispatcher&) = delete;
  Dispatcher& operator=(const Dispatcher&) = delete;

  void submit(SignalEnvelope e);
  /// Waits until everything submitted so far is acked and returns the
  /// receipts gathered since the previous flush. Throws EndpointUnavailable
  /// once the retry budget of an envelope is exhausted.
  std::vector<DeliveryReceipt> flush();

  /// Engine sink that wraps each signal into an envelope with the next
  /// per-run seq.
  SignalSink sink();

 private:
  void work();

  Endpoint& endpoint_;
  RetryPolicy policy_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<SignalEnvelope> queue_;
  std::vector<DeliveryReceipt> receipts_;
  std::map<std::string, std::uint64_t> next_seq_;
  std::optional<std::string> failure_;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread worker_;
};

SignalEnvelope make_envelope(const SignalEvent& ev, std::uint64_t seq);

/// NDJSON listener feeding a TwinService. One thread per connection.
class TwinServer {
 public:
  TwinServer(TwinService& service, int port);
  ~TwinServer();

  TwinServer(const TwinServer&) = delete;
  TwinServer& operator=(const TwinServer&) = delete;

  int port() const { return port_; }
  void stop();

 private:
  void accept_loop();
  void serve(int fd);

  TwinService& service_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::mutex mu_;
  std::vector<int> client_fds_;
  std::vector<std::thread> clients_;
  std::thread acceptor_;
  bool stopped_ = false;
};

}  // namespace envdt
