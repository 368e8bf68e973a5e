#include <doctest.h>

#include <random>

#include "oracles/random_packets.hpp"
#include "wheelcomm/wire.hpp"

using namespace wheelcomm;

TEST_CASE("DATA layout is bit-exact") {
    const WirePacket pkt{1, "a", DataBody{2, {0xAA}}};
    const Bytes expected{0x57, 0x54, 0x01, 0x01, 0x01, 0x00, 0x00, 0x00, 0x01, 'a',  0x02, 0x00, 0x00,
                         0x00, 0x00, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0xAA};
    CHECK(encode(pkt) == expected);
    CHECK(decode(expected) == pkt);
}

TEST_CASE("HEARTBEAT, ACKNACK, ANNOUNCE and GAP layouts") {
    CHECK(encode(WirePacket{0x01020304, "", HeartbeatBody{3, 7}}) ==
          Bytes{0x57, 0x54, 1, 2, 0x04, 0x03, 0x02, 0x01, 0, 3, 0, 0, 0, 0, 0, 0, 0, 7, 0, 0, 0, 0, 0, 0, 0});
    CHECK(encode(WirePacket{9, "t", AckNackBody{5, {6}}}) ==
          Bytes{0x57, 0x54, 1, 3, 9, 0, 0, 0, 1, 't', 5, 0, 0, 0, 0, 0, 0, 0, 1, 0, 6, 0, 0, 0, 0, 0, 0, 0});
    CHECK(encode(WirePacket{2, "", AnnounceBody{2, {"ab"}}}) ==
          Bytes{0x57, 0x54, 1, 4, 2, 0, 0, 0, 0, 2, 0, 0, 0, 1, 2, 'a', 'b'});
    CHECK(encode(WirePacket{2, "", GapBody{{1}}}) ==
          Bytes{0x57, 0x54, 1, 5, 2, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0});
}

TEST_CASE("kinds") {
    CHECK(WirePacket{0, "", DataBody{}}.kind() == PacketKind::Data);
    CHECK(WirePacket{0, "", HeartbeatBody{}}.kind() == PacketKind::Heartbeat);
    CHECK(WirePacket{0, "", AckNackBody{}}.kind() == PacketKind::AckNack);
    CHECK(WirePacket{0, "", AnnounceBody{}}.kind() == PacketKind::Announce);
    CHECK(WirePacket{0, "", GapBody{}}.kind() == PacketKind::Gap);
}

TEST_CASE("decode errors carry offsets") {
    auto good = encode(WirePacket{1, "topic", HeartbeatBody{1, 2}});

    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode(bad_magic), DecodeError);
    try {
        decode(bad_magic);
    } catch (const DecodeError& e) {
        CHECK(e.offset() == 0);
    }

    auto bad_version = good;
    bad_version[2] = 2;
    try {
        decode(bad_version);
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(e.offset() == 2);
    }

    auto bad_kind = good;
    bad_kind[3] = 9;
    try {
        decode(bad_kind);
        FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
        CHECK(e.offset() == 3);
    }

    for (std::size_t n = 0; n < good.size(); ++n)
        CHECK_THROWS_AS(decode(ByteView(good.data(), n)), DecodeError);

    auto trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode(trailing), DecodeError);
}

TEST_CASE("encode limits") {
    CHECK_THROWS_AS(encode(WirePacket{1, std::string(256, 'x'), HeartbeatBody{}}), EncodeError);
    CHECK_THROWS_AS(encode(WirePacket{1, "", DataBody{1, Bytes(kMaxDatagram, 0)}}), EncodeError);
    CHECK_THROWS_AS(encode(WirePacket{1, "", AckNackBody{1, std::vector<std::uint64_t>(70000, 1)}}), EncodeError);
    AnnounceBody many{1, std::vector<std::string>(256, "t")};
    CHECK_THROWS_AS(encode(WirePacket{1, "", many}), EncodeError);
    // Largest DATA that fits a datagram.
    const auto header = encode(WirePacket{1, "", DataBody{1, {}}}).size();
    CHECK(encode(WirePacket{1, "", DataBody{1, Bytes(kMaxDatagram - header, 7)}}).size() == kMaxDatagram);
}

TEST_CASE("random packets round-trip") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        const auto pkt = oracle::random_packet(rng);
        REQUIRE(decode(encode(pkt)) == pkt);
    }
}

TEST_CASE("random bytes never crash the decoder") {
    std::mt19937_64 rng(12);
    int accepted = 0;
    for (int i = 0; i < 5000; ++i) {
        auto bytes = encode(oracle::random_packet(rng));
        const auto flips = 1 + rng() % 3;
        for (std::uint64_t f = 0; f < flips; ++f) bytes[rng() % bytes.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        try {
            const auto pkt = decode(bytes);
            CHECK(encode(pkt) == bytes);
            ++accepted;
        } catch (const DecodeError&) {
        }
    }
    CHECK(accepted < 5000);
}
