#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <thread>

#include "apgm/error.hpp"
#include "apgm/grid_map.hpp"
#include "apgm/latency.hpp"
#include "apgm/quantize.hpp"
#include "apgm/transport.hpp"
#include "apgm/wire.hpp"

using namespace apgm;

namespace {

std::vector<GridMap> small_corpus(std::uint64_t seed = 61, std::uint64_t frames = 3) {
    CorpusConfig config;
    config.seed = seed;
    config.target_cells = 40000;
    return generate_corpus(config, frames);
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Minimal raw sender for receiver-side tests.
struct RawSender {
    int fd = -1;

    explicit RawSender(std::uint16_t port) {
        fd = ::socket(AF_INET, SOCK_STREAM, 0);
        REQUIRE(fd >= 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
        for (int i = 0; i < 200; ++i) {
            if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) return;
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        FAIL("could not connect to receiver");
    }

    ~RawSender() {
        if (fd >= 0) ::close(fd);
    }

    void send_frame(const Bytes& body) {
        std::uint8_t prefix[8];
        for (int i = 0; i < 8; ++i) {
            prefix[i] = static_cast<std::uint8_t>(body.size() >> (8 * i));
        }
        REQUIRE(::send(fd, prefix, 8, MSG_NOSIGNAL) == 8);
        std::size_t off = 0;
        while (off < body.size()) {
            const ssize_t n = ::send(fd, body.data() + off, body.size() - off, MSG_NOSIGNAL);
            REQUIRE(n > 0);
            off += static_cast<std::size_t>(n);
        }
    }
};

}  // namespace

TEST_CASE("token bucket paces writes to the configured rate") {
    TokenBucket bucket(8e6, 32 * 1024);  // 1 MB/s, 32 KiB burst
    const std::uint64_t total = 512 * 1024;
    const double t0 = now_seconds();
    std::uint64_t sent = 0;
    while (sent < total) {
        bucket.acquire(16 * 1024);
        sent += 16 * 1024;
    }
    const double elapsed = now_seconds() - t0;
    // burst credit covers the first 32 KiB; the rest is paced
    const double expected = static_cast<double>(total - 32 * 1024) / 1e6;
    CHECK(elapsed > expected * 0.85);
    CHECK(elapsed < expected * 1.25);
}

TEST_CASE("token bucket rejects oversized requests and bad rates") {
    CHECK_THROWS_AS(TokenBucket(0.0, 1024), ConfigError);
    TokenBucket bucket(1e6, 2048);
    CHECK_THROWS_AS(bucket.acquire(4096), ConfigError);
}

TEST_CASE("receiver yields frames in order and losslessly") {
    const auto corpus = small_corpus();
    Receiver receiver("127.0.0.1", 0);
    std::vector<GridMap> received;
    ReceiverResult result;
    std::thread server([&] {
        result = receiver.serve(
            [&](const Decoded& d, const ReceiverFrame&) { received.push_back(d.grid()); });
    });
    {
        RawSender sender(receiver.port());
        for (const GridMap& frame : corpus) {
            sender.send_frame(encode_patchwise(frame, CodecSpec::zstd(1), false).bytes);
        }
    }
    server.join();
    REQUIRE(result.frames.size() == corpus.size());
    CHECK(result.malformed == 0);
    REQUIRE(received.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        REQUIRE(received[i] == corpus[i]);
        CHECK(result.frames[i].index == i);
        CHECK(result.frames[i].decode_end_s >= result.frames[i].recv_complete_s);
    }
}

TEST_CASE("corrupted middle frame is skipped and counted") {
    const auto corpus = small_corpus(62, 3);
    Receiver receiver("127.0.0.1", 0);
    ReceiverResult result;
    std::thread server([&] { result = receiver.serve(); });
    {
        RawSender sender(receiver.port());
        Bytes ok0 = encode_patchwise(corpus[0], CodecSpec::zstd(1), false).bytes;
        Bytes bad = encode_patchwise(corpus[1], CodecSpec::zstd(1), false).bytes;
        bad[bad.size() / 2] ^= 0x10;
        Bytes ok2 = encode_patchwise(corpus[2], CodecSpec::zstd(1), false).bytes;
        sender.send_frame(ok0);
        sender.send_frame(bad);
        sender.send_frame(ok2);
    }
    server.join();
    CHECK(result.frames.size() == 2);
    CHECK(result.malformed == 1);
}

TEST_CASE("send_session round-trips frames with paired records") {
    const auto corpus = small_corpus(63, 3);
    ChannelConfig channel;
    channel.shaping = false;
    const SessionResult session =
        send_session(corpus, CodecSpec::lz4(1), false, WireMode::PatchWise, channel, {});
    REQUIRE(session.records.size() == corpus.size());
    CHECK(session.malformed == 0);
    CHECK(session.dropped == 0);
    std::uint64_t sum = 0;
    for (const TransferRecord& r : session.records) {
        CHECK(r.recv_complete_s >= r.send_start_s);
        CHECK(r.t_e2e_s > 0.0);
        CHECK(r.size_bytes ==
              encode_patchwise(corpus[r.index], CodecSpec::lz4(1), false).bytes.size());
        sum += r.size_bytes;
    }
    CHECK(sum == session.bytes_on_wire);
}

TEST_CASE("rate limiting spaces out sends") {
    const auto corpus = small_corpus(64, 1);
    ChannelConfig channel;
    channel.shaping = false;
    SessionOptions options;
    options.rate_hz = 4.0;  // 250 ms period
    options.messages = 4;
    const SessionResult session =
        send_session(corpus, CodecSpec::none(), true, WireMode::PatchWise, channel, options);
    REQUIRE(session.records.size() == 4);
    for (std::size_t i = 1; i < session.records.size(); ++i) {
        const double gap =
            session.records[i].send_start_s - session.records[i - 1].send_start_s;
        CHECK(gap >= 0.25 * 0.99);
    }
}

TEST_CASE("shaped channel delivers the modeled per-message wire time") {
    // ~1.25 MB at 10 Mbps should take close to a second of pure wire time.
    CorpusConfig config;
    config.seed = 65;
    config.target_cells = 160000;  // ~1.28 MB normal payload
    const auto corpus = generate_corpus(config, 1);

    ChannelConfig channel = ChannelConfig::v2x_10mbps();
    SessionOptions options;
    options.messages = 1;
    const SessionResult session =
        send_session(corpus, CodecSpec::none(), false, WireMode::PatchWise, channel, options);
    REQUIRE(session.records.size() == 1);
    const TransferRecord& r = session.records[0];
    const double wire = r.send_complete_s - r.send_start_s;
    const double expected = static_cast<double>(r.size_bytes + 8 - channel.burst_bytes) * 8.0 /
                            channel.target_bps;
    CHECK(wire > expected * 0.90);
    CHECK(wire < expected * 1.10);
}

TEST_CASE("loopback e2e time is within 3x of the analytic model") {
    CorpusConfig config;
    config.seed = 66;
    config.target_cells = 160000;
    const auto corpus = generate_corpus(config, 1);

    const double loopback_bps = measure_loopback_bps(64ull << 20);
    REQUIRE(loopback_bps > 0.0);

    ChannelConfig channel;
    channel.shaping = false;
    SessionOptions options;
    options.messages = 8;
    const SessionResult session =
        send_session(corpus, CodecSpec::none(), false, WireMode::PatchWise, channel, options);
    REQUIRE(session.records.size() == 8);
    std::vector<double> samples;
    for (const TransferRecord& r : session.records) samples.push_back(r.t_e2e_s);
    const double measured = summarize(samples).mean;

    const E2ETimings modeled = time_pipeline(corpus[0], CodecSpec::none(), false,
                                             WireMode::PatchWise, loopback_bps, {});
    const double ratio = measured / modeled.total();
    CHECK(ratio < 3.0);
    CHECK(ratio > 1.0 / 3.0);
}

TEST_CASE("channel validation") {
    ChannelConfig channel;
    channel.burst_bytes = 100;
    CHECK_THROWS_AS(validate_channel(channel), ConfigError);
    channel = ChannelConfig();
    channel.target_bps = -1.0;
    CHECK_THROWS_AS(validate_channel(channel), ConfigError);
    CHECK_NOTHROW(validate_channel(ChannelConfig::v2x_10mbps()));
    CHECK_NOTHROW(validate_channel(ChannelConfig::dpu_10gbps_loopback()));
}
