#include "envdt/bridge.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

namespace envdt {

using ojson = nlohmann::ordered_json;

namespace {

ojson value_json(const Value& v) {
  return std::visit([](const auto& x) { return ojson(x); }, v);
}

Value json_value(const nlohmann::json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw std::invalid_argument("unsupported payload value " + j.dump());
}

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

/// Reads one '\n'-terminated line into `line`, keeping leftovers in `buffer`.
bool read_line(int fd, std::string& buffer, std::string& line) {
  while (true) {
    auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return true;
    }
    char chunk[4096];
    ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

std::string degraded_label(SignalName n) {
  switch (n) {
    case SignalName::NoConnection: return "disconnected";
    case SignalName::NoPower: return "unpowered";
    case SignalName::DeadBattery: return "powered-off";
    case SignalName::VerifyFail: return "verification-failed";
    case SignalName::DeliveryFail: return "delivery-failed";
    case SignalName::DeviceError: return "device-error";
    case SignalName::SensorError: return "sensor-error";
    default: return "error";
  }
}

constexpr double kLowBatteryMirror = 20.0;

}  // namespace

std::string to_wire(const SignalEnvelope& e) {
  ojson j;
  j["v"] = "v1";
  j["runId"] = e.run_id;
  j["seq"] = e.seq;
  j["traceSeq"] = e.trace_seq;
  j["machine"] = e.machine;
  j["signal"] = e.signal;
  j["category"] = to_string(e.category);
  j["instance"] = e.instance;
  j["t_ms"] = e.t_ms;
  j["payload"] = ojson::object();
  for (const auto& [k, v] : e.payload) j["payload"][k] = value_json(v);
  return j.dump();
}

SignalEnvelope envelope_from_wire(std::string_view line) {
  auto j = nlohmann::json::parse(line);
  if (j.at("v").get<std::string>() != "v1") throw std::invalid_argument("unsupported envelope version");
  SignalEnvelope e;
  e.run_id = j.at("runId").get<std::string>();
  e.seq = j.at("seq").get<std::uint64_t>();
  e.trace_seq = j.at("traceSeq").get<std::uint64_t>();
  e.machine = j.at("machine").get<std::string>();
  e.signal = j.at("signal").get<std::string>();
  auto cat = category_from_string(j.at("category").get<std::string>());
  if (!cat) throw std::invalid_argument("unknown category");
  e.category = *cat;
  e.instance = j.at("instance").get<std::string>();
  e.t_ms = j.at("t_ms").get<std::int64_t>();
  for (const auto& [k, v] : j.at("payload").items()) e.payload[k] = json_value(v);
  return e;
}

std::string ack_line(const std::string& run_id, std::uint64_t seq) {
  ojson j;
  j["runId"] = run_id;
  j["seq"] = seq;
  return j.dump();
}

TwinStubState twin_stub_apply(TwinStubState s, const SignalEnvelope& e) {
  s.log.push_back({e.seq, e.signal, e.machine});
  for (const auto& [k, v] : e.payload) s.mirror[k] = v;

  auto lib = library_signal_from_string(e.signal);
  if (!lib) {
    s.mirror["last_interaction"] = e.signal;
    if (e.category == SignalCategory::Error) s.label = "error:" + e.signal;
    else if (s.label == "idle") s.label = "operational";
    return s;
  }
  if (library_category(*lib) == SignalCategory::Error) {
    s.label = degraded_label(*lib);
    return s;
  }
  switch (*lib) {
    case SignalName::FullBattery:
      s.mirror["battery"] = 100.0;
      break;
    case SignalName::LowBattery: {
      double cur = 100.0;
      if (auto it = s.mirror.find("battery"); it != s.mirror.end() && is_numeric(it->second)) {
        cur = as_double(it->second);
      }
      s.mirror["battery"] = std::min(cur, kLowBatteryMirror);
      break;
    }
    case SignalName::CartridgeInserted:
      s.mirror["cartridge"] = std::string("inserted");
      break;
    case SignalName::CartridgeEmpty:
      s.mirror["cartridge"] = std::string("empty");
      break;
    case SignalName::WeakConnection:
      s.mirror["connection"] = std::string("weak");
      break;
    case SignalName::ConnectionChanged:
      s.mirror["connection"] = std::string("connected");
      s.label = "operational";
      break;
    default:
      break;
  }
  if (s.label == "idle") s.label = "operational";
  return s;
}

// ---- TwinService -------------------------------------------------------------

std::uint64_t TwinService::accept(const SignalEnvelope& e) {
  std::lock_guard lock(mu_);
  auto& acked = acked_[e.run_id];
  if (e.seq <= acked) {
    ++duplicates_;
    return acked;
  }
  if (e.seq != acked + 1) return acked;
  states_[e.run_id] = twin_stub_apply(std::move(states_[e.run_id]), e);
  acked = e.seq;
  return acked;
}

std::optional<TwinStubState> TwinService::state(const std::string& run_id) const {
  std::lock_guard lock(mu_);
  auto it = states_.find(run_id);
  if (it == states_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> TwinService::runs() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [k, v] : states_) out.push_back(k);
  return out;
}

std::uint64_t TwinService::duplicates() const {
  std::lock_guard lock(mu_);
  return duplicates_;
}

// ---- endpoints ---------------------------------------------------------------

std::uint64_t InProcessEndpoint::deliver(const SignalEnvelope& e) {
  {
    std::lock_guard lock(mu_);
    if (fail_ > 0) {
      --fail_;
      throw EndpointUnavailable("injected endpoint failure");
    }
  }
  std::uint64_t ack = service_.accept(e);
  std::lock_guard lock(mu_);
  if (drop_ > 0) {
    --drop_;
    throw EndpointUnavailable("injected ack loss");
  }
  return ack;
}

void InProcessEndpoint::fail_next(int n) {
  std::lock_guard lock(mu_);
  fail_ += n;
}

void InProcessEndpoint::drop_acks(int n) {
  std::lock_guard lock(mu_);
  drop_ += n;
}

TcpEndpoint::TcpEndpoint(std::string host, int port) : host_(std::move(host)), port_(port) {}

TcpEndpoint::~TcpEndpoint() { reset(); }

std::unique_ptr<TcpEndpoint> TcpEndpoint::from_uri(std::string_view uri) {
  constexpr std::string_view kScheme = "tcp://";
  if (uri.substr(0, kScheme.size()) != kScheme) throw std::invalid_argument("expected tcp://host:port");
  auto rest = uri.substr(kScheme.size());
  auto colon = rest.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw std::invalid_argument("expected tcp://host:port");
  int port = 0;
  auto digits = rest.substr(colon + 1);
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc() || p != digits.data() + digits.size() || port <= 0 || port > 65535) {
    throw std::invalid_argument("bad port in " + std::string(uri));
  }
  return std::make_unique<TcpEndpoint>(std::string(rest.substr(0, colon)), port);
}

void TcpEndpoint::connect_socket() {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host_.c_str(), std::to_string(port_).c_str(), &hints, &res) != 0 || !res) {
    throw EndpointUnavailable("cannot resolve " + host_);
  }
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw EndpointUnavailable(fmt::format("cannot connect to {}:{}", host_, port_));
  timeval tv{2, 0};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  fd_ = fd;
  buffer_.clear();
}

std::uint64_t TcpEndpoint::deliver(const SignalEnvelope& e) {
  if (fd_ < 0) connect_socket();
  if (!send_all(fd_, to_wire(e) + "\n")) {
    reset();
    throw EndpointUnavailable("send failed");
  }
  std::string line;
  if (!read_line(fd_, buffer_, line)) {
    reset();
    throw EndpointUnavailable("connection closed before ack");
  }
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.contains("seq")) {
    reset();
    throw EndpointUnavailable("malformed ack: " + line);
  }
  return j["seq"].get<std::uint64_t>();
}

void TcpEndpoint::reset() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  buffer_.clear();
}

// ---- Dispatcher --------------------------------------------------------------

SignalEnvelope make_envelope(const SignalEvent& ev, std::uint64_t seq) {
  SignalEnvelope e;
  e.run_id = ev.run_id;
  e.seq = seq;
  e.trace_seq = ev.seq;
  e.machine = ev.machine;
  e.signal = ev.signal.display_name();
  e.category = ev.signal.category();
  e.instance = ev.instance;
  e.t_ms = ev.t_ms;
  e.payload = ev.payload;
  return e;
}

Dispatcher::Dispatcher(Endpoint& endpoint, RetryPolicy policy)
    : endpoint_(endpoint), policy_(policy), worker_([this] { work(); }) {}

Dispatcher::~Dispatcher() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void Dispatcher::submit(SignalEnvelope e) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(e));
  }
  cv_.notify_all();
}

SignalSink Dispatcher::sink() {
  return [this](const SignalEvent& ev) {
    std::uint64_t seq;
    {
      std::lock_guard lock(mu_);
      seq = ++next_seq_[ev.run_id];
    }
    submit(make_envelope(ev, seq));
  };
}

std::vector<DeliveryReceipt> Dispatcher::flush() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return failure_ || (queue_.empty() && !busy_); });
  if (failure_) throw EndpointUnavailable(*failure_);
  return std::exchange(receipts_, {});
}

void Dispatcher::work() {
  while (true) {
    SignalEnvelope e;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || (!queue_.empty() && !failure_); });
      if (queue_.empty() || failure_) return;
      e = queue_.front();
      busy_ = true;
    }
    int attempts = 0;
    auto backoff = policy_.initial;
    std::optional<std::uint64_t> ack;
    std::string last_error;
    while (!ack) {
      ++attempts;
      try {
        std::uint64_t a = endpoint_.deliver(e);
        if (a >= e.seq) {
          ack = a;
          break;
        }
        last_error = fmt::format("ack {} behind seq {}", a, e.seq);
      } catch (const EndpointUnavailable& ex) {
        last_error = ex.what();
      }
      if (attempts > policy_.max_retries) break;
      endpoint_.reset();
      std::this_thread::sleep_for(backoff);
      backoff = std::min(backoff * 2, policy_.cap);
    }
    {
      std::lock_guard lock(mu_);
      busy_ = false;
      if (!ack) {
        failure_ = fmt::format("run {} seq {}: gave up after {} attempts: {}", e.run_id, e.seq, attempts, last_error);
      } else {
        queue_.pop_front();
        receipts_.push_back({e.run_id, e.seq, *ack, attempts});
      }
    }
    cv_.notify_all();
  }
}

// ---- TwinServer --------------------------------------------------------------

TwinServer::TwinServer(TwinService& service, int port) : service_(service) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 16) != 0) {
    int err = errno;
    ::close(listen_fd_);
    throw std::runtime_error(fmt::format("cannot listen on port {}: {}", port, std::strerror(err)));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TwinServer::~TwinServer() { stop(); }

void TwinServer::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopped_) return;
    stopped_ = true;
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  acceptor_.join();
  for (auto& t : clients_) t.join();
  for (int fd : client_fds_) ::close(fd);
}

void TwinServer::accept_loop() {
  while (true) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    std::lock_guard lock(mu_);
    if (stopped_) {
      if (fd >= 0) ::close(fd);
      return;
    }
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      return;
    }
    client_fds_.push_back(fd);
    clients_.emplace_back([this, fd] { serve(fd); });
  }
}

void TwinServer::serve(int fd) {
  std::string buffer, line;
  while (read_line(fd, buffer, line)) {
    if (line.empty()) continue;
    std::string reply;
    try {
      SignalEnvelope e = envelope_from_wire(line);
      reply = ack_line(e.run_id, service_.accept(e));
    } catch (const std::exception& ex) {
      ojson j;
      j["error"] = ex.what();
      reply = j.dump();
    }
    if (!send_all(fd, reply + "\n")) return;
  }
}

}  // namespace envdt
