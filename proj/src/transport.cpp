#include "apgm/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ostream>
#include <thread>

#include "apgm/error.hpp"
#include "apgm/rng.hpp"

namespace apgm {
namespace {

using Clock = std::chrono::steady_clock;

double now_seconds() {
    return std::chrono::duration<double>(Clock::now().time_since_epoch()).count();
}

std::uint64_t now_ns() {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now().time_since_epoch())
            .count());
}

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket() { reset(); }

    Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
    Socket& operator=(Socket&& other) noexcept {
        if (this != &other) {
            reset();
            fd_ = other.fd_;
            other.fd_ = -1;
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }

    int release() {
        const int fd = fd_;
        fd_ = -1;
        return fd;
    }

    void reset() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
};

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        throw IoError("invalid IPv4 address: " + host);
    }
    return addr;
}

void write_all(int fd, const std::uint8_t* data, std::size_t len) {
    std::size_t sent = 0;
    while (sent < len) {
        const ssize_t n = ::send(fd, data + sent, len - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IoError(std::string("socket write failed: ") + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(n);
    }
}

// Returns bytes read; short count means EOF.
std::size_t read_upto_eof(int fd, std::uint8_t* data, std::size_t len) {
    std::size_t got = 0;
    while (got < len) {
        const ssize_t n = ::recv(fd, data + got, len - got, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw IoError(std::string("socket read failed: ") + std::strerror(errno));
        }
        if (n == 0) break;
        got += static_cast<std::size_t>(n);
    }
    return got;
}

std::uint64_t decode_u64le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

void encode_u64le(std::uint8_t* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

Socket connect_with_retry(const std::string& host, std::uint16_t port, double timeout_s) {
    const sockaddr_in addr = make_addr(host, port);
    const double deadline = now_seconds() + timeout_s;
    for (;;) {
        Socket s(::socket(AF_INET, SOCK_STREAM, 0));
        if (!s.valid()) throw IoError("socket creation failed");
        if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
            const int one = 1;
            ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            return s;
        }
        if (now_seconds() > deadline) {
            throw IoError("connect timed out: " + host + ":" + std::to_string(port));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
}

// Gaussian draw via Box-Muller on the fixed PRNG, truncated to >= 0.1*mean.
double sample_truncated_gaussian(SplitMix64& rng, double mean, double std) {
    const double floor_value = 0.1 * mean;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        double u1 = rng.next_unit();
        if (u1 <= 0.0) u1 = 1e-12;
        const double u2 = rng.next_unit();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
        const double v = mean + std * z;
        if (v >= floor_value) return v;
    }
    return floor_value;
}

}  // namespace

// ------------------------------------------------------------- TokenBucket

TokenBucket::TokenBucket(double rate_bps, std::uint64_t burst_bytes)
    : rate_bps_(rate_bps),
      capacity_bytes_(static_cast<double>(burst_bytes)),
      tokens_bytes_(static_cast<double>(burst_bytes)),
      last_refill_ns_(now_ns()) {
    if (rate_bps <= 0.0) throw ConfigError("token bucket rate must be positive");
    if (burst_bytes == 0) throw ConfigError("token bucket burst must be positive");
}

void TokenBucket::set_rate_bps(double rate_bps) {
    if (rate_bps <= 0.0) throw ConfigError("token bucket rate must be positive");
    refill();
    rate_bps_ = rate_bps;
}

void TokenBucket::refill() {
    const std::uint64_t now = now_ns();
    const double elapsed_s = static_cast<double>(now - last_refill_ns_) * 1e-9;
    last_refill_ns_ = now;
    tokens_bytes_ = std::min(capacity_bytes_, tokens_bytes_ + elapsed_s * rate_bps_ / 8.0);
}

void TokenBucket::acquire(std::uint64_t bytes) {
    const auto need = static_cast<double>(bytes);
    if (need > capacity_bytes_) {
        throw ConfigError("token bucket request exceeds burst depth");
    }
    refill();
    // Commit the credit up front; a negative balance is debt that has to be
    // slept off. Oversleep becomes surplus on the next refill instead of
    // being clipped at the burst cap, so the long-run rate stays exact.
    tokens_bytes_ -= need;
    while (tokens_bytes_ < 0.0) {
        const double debt_s = -tokens_bytes_ / (rate_bps_ / 8.0);
        std::this_thread::sleep_for(std::chrono::duration<double>(std::min(debt_s, 1e-3)));
        refill();
    }
}

// ------------------------------------------------------------ ChannelConfig

ChannelConfig ChannelConfig::v2x_10mbps() {
    ChannelConfig c;
    c.target_bps = 10e6;
    c.burst_bytes = 64 * 1024;
    return c;
}

ChannelConfig ChannelConfig::dpu_10gbps_loopback() {
    ChannelConfig c;
    c.target_bps = 10e9;
    c.burst_bytes = 8 * 1024 * 1024;
    return c;
}

void validate_channel(const ChannelConfig& channel) {
    if (channel.target_bps <= 0.0) throw ConfigError("channel target_bps must be positive");
    if (channel.burst_bytes < 1500) {
        throw ConfigError("burst_bytes must cover at least one segment (1500 bytes)");
    }
    if (channel.jitter &&
        (channel.jitter->mean_bps <= 0.0 || channel.jitter->std_bps < 0.0)) {
        throw ConfigError("gaussian jitter requires mean > 0 and std >= 0");
    }
}

// ----------------------------------------------------------------- Receiver

Receiver::Receiver(const std::string& host, std::uint16_t port) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw IoError("socket creation failed");
    const int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = make_addr(host, port);
    if (::bind(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw IoError("bind failed on " + host + ":" + std::to_string(port) + ": " +
                      std::strerror(errno));
    }
    if (::listen(s.fd(), 1) != 0) throw IoError("listen failed");
    socklen_t len = sizeof(addr);
    if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
        throw IoError("getsockname failed");
    }
    port_ = ntohs(addr.sin_port);
    listen_fd_ = s.release();
}

Receiver::~Receiver() {
    if (listen_fd_ >= 0) ::close(listen_fd_);
}

ReceiverResult Receiver::serve(const Sink& sink) {
    Socket conn(::accept(listen_fd_, nullptr, nullptr));
    if (!conn.valid()) throw IoError("accept failed");
    const int one = 1;
    ::setsockopt(conn.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

    ReceiverResult result;
    std::uint64_t index = 0;
    constexpr std::uint64_t kMaxFrame = 1ull << 32;
    for (;;) {
        std::uint8_t prefix[8];
        const std::size_t got = read_upto_eof(conn.fd(), prefix, 8);
        if (got == 0) break;  // clean end of stream
        if (got != 8) break;  // connection lost mid-prefix: shut down cleanly
        const std::uint64_t len = decode_u64le(prefix);
        if (len == 0 || len > kMaxFrame) {
            ++result.malformed;
            break;  // framing unusable beyond this point
        }
        Bytes body(static_cast<std::size_t>(len));
        if (read_upto_eof(conn.fd(), body.data(), body.size()) != body.size()) break;
        ReceiverFrame frame;
        frame.size_bytes = len;
        frame.recv_complete_s = now_seconds();
        try {
            const Decoded decoded = decode(body);
            frame.decode_end_s = now_seconds();
            frame.index = index++;
            if (sink) sink(decoded, frame);
            result.frames.push_back(frame);
        } catch (const Error&) {
            ++result.malformed;
        }
    }
    return result;
}

// ------------------------------------------------------------ send_session

SessionResult send_session(const std::vector<GridMap>& corpus, const CodecSpec& spec,
                           bool quantized, WireMode mode, const ChannelConfig& channel,
                           const SessionOptions& options) {
    if (corpus.empty()) throw ConfigError("corpus must not be empty");
    validate_channel(channel);
    validate_spec(spec);

    const std::uint64_t messages =
        options.messages < 0 ? corpus.size() : static_cast<std::uint64_t>(options.messages);
    if (messages == 0) throw ConfigError("session needs at least one message");

    Receiver receiver(channel.host, channel.port);
    ReceiverResult recv_result;
    std::thread recv_thread([&] { recv_result = receiver.serve(); });

    SessionResult result;
    std::vector<TransferRecord> sent;
    sent.reserve(messages);

    try {
        Socket conn = connect_with_retry(channel.host, receiver.port(), 5.0);
        TokenBucket bucket(channel.target_bps, channel.burst_bytes);
        SplitMix64 jitter_rng(channel.jitter_seed);

        const double period = options.rate_hz > 0.0 ? 1.0 / options.rate_hz : 0.0;
        const double session_start = now_seconds();
        double first_send = 0.0;
        double last_send_end = 0.0;

        for (std::uint64_t i = 0; i < messages; ++i) {
            if (period > 0.0) {
                const double scheduled = session_start + static_cast<double>(i) * period;
                const double lag = now_seconds() - scheduled;
                if (lag > period * options.queue_bound) {
                    ++result.dropped;  // behind schedule beyond the queue bound: drop oldest
                    continue;
                }
                if (lag < 0.0) {
                    std::this_thread::sleep_for(std::chrono::duration<double>(-lag));
                }
            }

            TransferRecord rec;
            rec.index = i;
            rec.encode_start_s = now_seconds();
            const GridMap& frame = corpus[i % corpus.size()];
            const WireMessage msg = mode == WireMode::PatchWise
                                        ? encode_patchwise(frame, spec, quantized)
                                        : encode_full(frame, spec, quantized);
            rec.size_bytes = msg.bytes.size();

            if (channel.jitter) {
                bucket.set_rate_bps(sample_truncated_gaussian(
                    jitter_rng, channel.jitter->mean_bps, channel.jitter->std_bps));
            }

            std::uint8_t prefix[8];
            encode_u64le(prefix, msg.bytes.size());
            rec.send_start_s = now_seconds();
            if (first_send == 0.0) first_send = rec.send_start_s;
            if (channel.shaping) {
                bucket.acquire(8);
                write_all(conn.fd(), prefix, 8);
                std::size_t off = 0;
                const std::size_t chunk =
                    std::min<std::uint64_t>(options.chunk_bytes, channel.burst_bytes);
                while (off < msg.bytes.size()) {
                    const std::size_t n = std::min(chunk, msg.bytes.size() - off);
                    bucket.acquire(n);
                    write_all(conn.fd(), msg.bytes.data() + off, n);
                    off += n;
                }
            } else {
                write_all(conn.fd(), prefix, 8);
                write_all(conn.fd(), msg.bytes.data(), msg.bytes.size());
            }
            rec.send_complete_s = now_seconds();
            last_send_end = rec.send_complete_s;
            result.bytes_on_wire += msg.bytes.size();
            sent.push_back(rec);
        }
        conn.reset();  // EOF ends the receiver loop
        result.wall_seconds = last_send_end - first_send;
        if (result.wall_seconds > 0.0) {
            result.goodput_bps =
                static_cast<double>(result.bytes_on_wire) * 8.0 / result.wall_seconds;
        }
    } catch (...) {
        recv_thread.join();
        throw;
    }
    recv_thread.join();

    result.malformed = recv_result.malformed;
    // Frames arrive in send order; pair them up positionally.
    const std::size_t paired = std::min(sent.size(), recv_result.frames.size());
    for (std::size_t i = 0; i < paired; ++i) {
        TransferRecord rec = sent[i];
        rec.recv_complete_s = recv_result.frames[i].recv_complete_s;
        rec.decode_end_s = recv_result.frames[i].decode_end_s;
        rec.t_e2e_s = rec.decode_end_s - rec.encode_start_s;
        result.records.push_back(rec);
    }
    return result;
}

double measure_loopback_bps(std::uint64_t bytes) {
    Socket listener(::socket(AF_INET, SOCK_STREAM, 0));
    if (!listener.valid()) throw IoError("socket creation failed");
    const int one = 1;
    ::setsockopt(listener.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = make_addr("127.0.0.1", 0);
    if (::bind(listener.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw IoError("bind failed for loopback calibration");
    }
    if (::listen(listener.fd(), 1) != 0) throw IoError("listen failed");
    socklen_t len = sizeof(addr);
    if (::getsockname(listener.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
        throw IoError("getsockname failed");
    }
    const std::uint16_t port = ntohs(addr.sin_port);

    std::uint64_t drained = 0;
    std::thread drain([&] {
        Socket conn(::accept(listener.fd(), nullptr, nullptr));
        if (!conn.valid()) return;
        std::vector<std::uint8_t> buf(1 << 20);
        for (;;) {
            const ssize_t n = ::recv(conn.fd(), buf.data(), buf.size(), 0);
            if (n <= 0) break;
            drained += static_cast<std::uint64_t>(n);
        }
    });

    double elapsed = 0.0;
    {
        Socket conn = connect_with_retry("127.0.0.1", port, 5.0);
        std::vector<std::uint8_t> payload(1 << 20, 0xA5);
        const double t0 = now_seconds();
        std::uint64_t sent = 0;
        while (sent < bytes) {
            const std::size_t n =
                static_cast<std::size_t>(std::min<std::uint64_t>(payload.size(), bytes - sent));
            write_all(conn.fd(), payload.data(), n);
            sent += n;
        }
        conn.reset();
        drain.join();
        elapsed = now_seconds() - t0;
    }
    if (elapsed <= 0.0) return 0.0;
    return static_cast<double>(drained) * 8.0 / elapsed;
}

// ---------------------------------------------------------- run_evaluation

const char* preset_name(EvalPreset preset) {
    return preset == EvalPreset::V2X10Mbps ? "v2x" : "dpu";
}

EvalReport run_evaluation(const std::vector<GridMap>& corpus, EvalPreset preset,
                          int messages_per_cell, const TimingOptions& timing) {
    if (corpus.empty()) throw ConfigError("corpus must not be empty");
    if (messages_per_cell < 1) throw ConfigError("messages_per_cell must be >= 1");

    EvalReport report;
    report.preset = preset;
    const ChannelConfig base = preset == EvalPreset::V2X10Mbps
                                   ? ChannelConfig::v2x_10mbps()
                                   : ChannelConfig::dpu_10gbps_loopback();
    report.bandwidth_bps = base.target_bps;
    report.loopback_bps = measure_loopback_bps(64ull << 20);
    const bool shaped_limited = report.loopback_bps < base.target_bps;

    // Parameters the optimal-parameter search selects for this bandwidth.
    const OptimalChoice lz4_n =
        optimal_param(corpus, Algorithm::LZ4, false, base.target_bps, timing);
    const OptimalChoice lz4_q =
        optimal_param(corpus, Algorithm::LZ4, true, base.target_bps, timing);
    const OptimalChoice zstd_n =
        optimal_param(corpus, Algorithm::Zstd, false, base.target_bps, timing);
    const OptimalChoice zstd_q =
        optimal_param(corpus, Algorithm::Zstd, true, base.target_bps, timing);

    struct CellPlan {
        CodecSpec spec;
        bool quantized;
    };
    const CellPlan plans[6] = {
        {CodecSpec::none(), false},
        {CodecSpec::lz4(lz4_n.param), false},
        {CodecSpec::zstd(zstd_n.param), false},
        {CodecSpec::none(), true},
        {CodecSpec::lz4(lz4_q.param), true},
        {CodecSpec::zstd(zstd_q.param), true},
    };

    for (const CellPlan& plan : plans) {
        ChannelConfig channel = base;
        SessionOptions options;
        options.messages = messages_per_cell;
        const SessionResult session =
            send_session(corpus, plan.spec, plan.quantized, WireMode::PatchWise, channel, options);
        std::vector<double> e2e_ms;
        e2e_ms.reserve(session.records.size());
        for (const TransferRecord& r : session.records) e2e_ms.push_back(r.t_e2e_s * 1e3);
        EvalCell cell;
        cell.spec = plan.spec;
        cell.quantized = plan.quantized;
        cell.param_used = plan.spec.param;
        cell.t_e2e_ms = summarize(e2e_ms);
        cell.shaped_limited = shaped_limited;
        cell.messages = session.records.size();
        report.cells.push_back(cell);
    }
    return report;
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
    out << "preset,stat";
    for (const EvalCell& cell : report.cells) {
        out << ',' << spec_label(cell.spec) << (cell.quantized ? "^q" : "");
    }
    out << '\n';
    const char* stat_names[4] = {"mean", "std", "min", "max"};
    for (int s = 0; s < 4; ++s) {
        out << preset_name(report.preset) << ',' << stat_names[s];
        for (const EvalCell& cell : report.cells) {
            const double v = s == 0   ? cell.t_e2e_ms.mean
                             : s == 1 ? cell.t_e2e_ms.std
                             : s == 2 ? cell.t_e2e_ms.min
                                      : cell.t_e2e_ms.max;
            out << ',' << v;
        }
        out << '\n';
    }
}

}  // namespace apgm
