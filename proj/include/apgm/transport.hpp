#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "apgm/codec.hpp"
#include "apgm/grid_map.hpp"
#include "apgm/latency.hpp"
#include "apgm/wire.hpp"

namespace apgm {

/// Per-message bandwidth resampling: each message is shaped at an
/// independent Gaussian draw, truncated to >= 0.1 * mean_bps.
struct GaussianJitter {
    double mean_bps = 6.36e6;
    double std_bps = 3.09e6;
};

struct ChannelConfig {
    double target_bps = 10e6;
    std::uint64_t burst_bytes = 64 * 1024;  // token bucket depth
    std::optional<GaussianJitter> jitter;
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;  // 0: bind an ephemeral port
    std::uint64_t jitter_seed = 1;
    bool shaping = true;

    static ChannelConfig v2x_10mbps();
    static ChannelConfig dpu_10gbps_loopback();
};

void validate_channel(const ChannelConfig& channel);

/// Byte-credit rate limiter. Credits accrue continuously at the configured
/// rate up to the burst depth; acquire() blocks (1 ms sleep quantum) until
/// the requested credit is available. Single-writer use.
class TokenBucket {
public:
    TokenBucket(double rate_bps, std::uint64_t burst_bytes);

    void set_rate_bps(double rate_bps);
    double rate_bps() const { return rate_bps_; }

    /// Blocks until `bytes` credits are available, then consumes them.
    /// `bytes` must not exceed the burst depth.
    void acquire(std::uint64_t bytes);

private:
    void refill();

    double rate_bps_;
    double capacity_bytes_;
    double tokens_bytes_;
    std::uint64_t last_refill_ns_;
};

/// One transmitted message, timestamps on the process-wide monotonic clock
/// (sender and receiver are co-hosted, so one clock suffices).
struct TransferRecord {
    std::uint64_t index = 0;
    std::uint64_t size_bytes = 0;       // wire message length (excl. frame prefix)
    double encode_start_s = 0.0;
    double send_start_s = 0.0;
    double send_complete_s = 0.0;
    double recv_complete_s = 0.0;
    double decode_end_s = 0.0;
    double t_e2e_s = 0.0;  // encode start -> decode end
};

struct ReceiverFrame {
    std::uint64_t index = 0;  // arrival order
    std::uint64_t size_bytes = 0;
    double recv_complete_s = 0.0;
    double decode_end_s = 0.0;
};

struct ReceiverResult {
    std::vector<ReceiverFrame> frames;
    std::uint64_t malformed = 0;
};

/// Blocking receiver over a stream socket: accepts one sender, reads
/// length-prefixed WireMessages, decodes each and hands the grid to `sink`
/// in arrival order. Malformed frames are counted and skipped; connection
/// loss ends the stream cleanly.
class Receiver {
public:
    using Sink = std::function<void(const Decoded&, const ReceiverFrame&)>;

    Receiver(const std::string& host, std::uint16_t port);
    ~Receiver();

    Receiver(const Receiver&) = delete;
    Receiver& operator=(const Receiver&) = delete;

    std::uint16_t port() const { return port_; }

    /// Accepts one connection and serves it to EOF.
    ReceiverResult serve(const Sink& sink = {});

private:
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
};

struct SessionOptions {
    double rate_hz = 0.0;       // 0 = unthrottled
    int messages = -1;          // -1 = one per corpus frame
    int queue_bound = 8;        // drop-oldest beyond this backlog (messages)
    std::uint64_t chunk_bytes = 16 * 1024;  // shaped write granularity
};

struct SessionResult {
    std::vector<TransferRecord> records;
    std::uint64_t dropped = 0;
    std::uint64_t malformed = 0;
    std::uint64_t bytes_on_wire = 0;  // sum of framed message bytes
    double goodput_bps = 0.0;         // message bytes over send wall time
    double wall_seconds = 0.0;
};

/// Encodes corpus frames (cycled when options.messages exceeds the corpus)
/// and writes them through a token-bucket-shaped loopback socket at most
/// `options.rate_hz` messages per second. A co-hosted Receiver decodes on a
/// second thread; records carry both sides' timestamps.
SessionResult send_session(const std::vector<GridMap>& corpus, const CodecSpec& spec,
                           bool quantized, WireMode mode, const ChannelConfig& channel,
                           const SessionOptions& options = {});

/// Unshaped loopback byte-blast, returns achievable bps. Used to decide
/// whether a preset is achievable on this host.
double measure_loopback_bps(std::uint64_t bytes = 256 * 1024 * 1024);

enum class EvalPreset { V2X10Mbps, Dpu10GbpsLoopback };

const char* preset_name(EvalPreset preset);

struct EvalCell {
    CodecSpec spec;
    bool quantized = false;
    std::int32_t param_used = 0;
    Stats t_e2e_ms;        // over all transmitted messages
    bool shaped_limited = false;
    std::uint64_t messages = 0;
};

struct EvalReport {
    EvalPreset preset = EvalPreset::V2X10Mbps;
    double bandwidth_bps = 0.0;
    double loopback_bps = 0.0;  // calibration result
    std::vector<EvalCell> cells;  // None, LZ4, Zstd, None^q, LZ4^q, Zstd^q
};

/// Runs the (codec x quantized) matrix over the preset channel,
/// >= `messages_per_cell` messages each, LZ4/Zstd at the parameters the
/// optimal-parameter search selects for the preset bandwidth.
EvalReport run_evaluation(const std::vector<GridMap>& corpus, EvalPreset preset,
                          int messages_per_cell = 50, const TimingOptions& timing = {});

/// CSV in the evaluation-table layout: one column per codec, one row per
/// statistic (mean, std, min, max), milliseconds.
void write_eval_csv(std::ostream& out, const EvalReport& report);

}  // namespace apgm
