#include <doctest.h>

#include <random>
#include <sstream>
#include <string>

#include "oracles/reference_scheduler.hpp"
#include "wheelcomm/rt_scheduler.hpp"

using namespace wheelcomm;

namespace {

TaskSpec periodic(std::string name, int core, int prio, Tick period, Tick phase = 0, TaskHandler h = {}) {
    TaskSpec s;
    s.name = std::move(name);
    s.core = core;
    s.priority = prio;
    s.period = period;
    s.phase = phase;
    s.handler = std::move(h);
    return s;
}

std::vector<int> running_on(const Scheduler& s, int core) {
    std::vector<int> out;
    for (const auto& e : s.trace())
        if (e.core == core) out.push_back(e.task);
    return out;
}

}  // namespace

TEST_CASE("spawn validation") {
    Scheduler s;
    const auto am = s.spawn(periodic("am", 1, 2, 7));
    CHECK(s.status(am) == TaskStatus::Ready);
    CHECK_THROWS_WITH_AS(s.spawn(periodic("x", 2, 1, 5)), doctest::Contains("invalid core"), SchedulerError);
    CHECK_THROWS_WITH_AS(s.spawn(periodic("am", 0, 1, 5)), doctest::Contains("duplicate"), SchedulerError);
    CHECK_THROWS_AS(s.spawn(periodic("p0", 0, 0, 5)), SchedulerError);
    CHECK_THROWS_AS(s.spawn(periodic("t0", 0, 1, 0)), SchedulerError);
    auto jittery = periodic("j", 0, 1, 4);
    jittery.jitter = 2;
    CHECK_THROWS_AS(s.spawn(jittery), SchedulerError);
    const auto entries = s.advance_tick();
    REQUIRE(entries.size() == 2);
    CHECK(entries[1].task == static_cast<int>(am.index));
}

TEST_CASE("higher priority wins on its core") {
    Scheduler s;
    const auto tp = s.spawn(periodic("tp", 1, 4, 200));
    s.spawn(periodic("bsoc", 1, 5, 1000));
    const auto e = s.advance_tick();
    CHECK(e[1].task == static_cast<int>(tp.index));
    // BSoC runs on the next tick once TP is served.
    CHECK(s.advance_tick()[1].task == 1);
    CHECK(s.advance_tick()[1].task == -1);
}

TEST_CASE("priority order flag") {
    Scheduler s(SchedulerConfig{PriorityOrder::HigherNumberIsHigher, 0, true});
    s.spawn(periodic("low", 0, 1, 10));
    const auto high = s.spawn(periodic("high", 0, 5, 10));
    CHECK(s.advance_tick()[0].task == static_cast<int>(high.index));
}

TEST_CASE("equal priorities alternate tick by tick") {
    Scheduler s;
    s.spawn(periodic("a", 0, 1, 1));
    s.spawn(periodic("b", 0, 1, 1));
    s.run_until(100);
    const auto core0 = running_on(s, 0);
    int a = 0;
    for (std::size_t i = 0; i < core0.size(); ++i) {
        if (i > 0) CHECK(core0[i] != core0[i - 1]);
        a += core0[i] == 0;
    }
    CHECK(a == 50);
}

TEST_CASE("periodic activation count and drift-free anchoring") {
    Scheduler s;
    std::vector<Tick> releases;
    const auto h = s.spawn(periodic("p", 0, 1, 7, 3, [&](TaskContext& ctx) { releases.push_back(ctx.activation_tick()); }));
    s.run_until(1000);
    // phase 3: releases at 3, 10, ..., 997
    CHECK(s.activations(h) == (1000 - 3 - 1) / 7 + 1);
    for (std::size_t k = 0; k < releases.size(); ++k) CHECK(releases[k] == 3 + 7 * static_cast<Tick>(k));
}

TEST_CASE("multi-tick cost is preempted and resumed") {
    Scheduler s;
    auto lo = periodic("lo", 0, 2, 100);
    lo.cost_ticks = 3;
    s.spawn(lo);
    s.spawn(periodic("hi", 0, 1, 2, 1));
    s.run_until(8);
    // lo: t0, hi: t1, lo: t2, hi: t3, lo: t4, hi t5, idle t6, hi t7
    CHECK(running_on(s, 0) == std::vector<int>{0, 1, 0, 1, 0, 1, -1, 1});
}

TEST_CASE("queue FIFO, overflow and conservation") {
    Scheduler s;
    const auto q = s.create_queue(2);
    CHECK(s.queue_send(q, std::string("a")) == SendResult::Ok);
    CHECK(s.queue_send(q, std::string("b")) == SendResult::Ok);
    CHECK(s.queue_send(q, std::string("c")) == SendResult::Overflow);
    CHECK(s.queue_stats(q).overflow == 1);
    CHECK(std::any_cast<std::string>(*s.queue_try_receive(q)) == "a");
    CHECK(std::any_cast<std::string>(*s.queue_try_receive(q)) == "b");
    CHECK_FALSE(s.queue_try_receive(q).has_value());

    const auto q3 = s.create_queue(3);
    for (const char* v : {"a", "b", "c"}) s.queue_send(q3, std::string(v));
    std::string got;
    while (auto item = s.queue_try_receive(q3)) got += std::any_cast<std::string>(*item);
    CHECK(got == "abc");

    const auto d = s.create_queue(2, OverflowPolicy::DropOldest);
    for (int i = 0; i < 5; ++i) s.queue_send(d, i);
    CHECK(std::any_cast<int>(*s.queue_try_receive(d)) == 3);
    for (auto h : {q, q3, d}) {
        const auto st = s.queue_stats(h);
        CHECK(st.items_in == st.items_out + st.pending + st.overflow);
    }
}

TEST_CASE("blocking receive times out after the timeout") {
    Scheduler s;
    const auto q = s.create_queue(4);
    std::vector<std::pair<Tick, WakeReason>> log;
    const auto h = s.spawn(periodic("rx", 0, 1, 1000, 0, [&](TaskContext& ctx) {
        log.emplace_back(ctx.now(), ctx.reason());
        if (ctx.reason() == WakeReason::Activation) ctx.queue_receive(q, 5);
    }));
    s.advance_tick();
    for (int i = 0; i < 4; ++i) {
        s.advance_tick();
        CHECK(s.status(h) == TaskStatus::Blocked);
    }
    s.advance_tick();
    REQUIRE(log.size() == 2);
    CHECK(log[1] == std::make_pair(Tick{5}, WakeReason::QueueTimeout));
}

TEST_CASE("blocked receiver gets the item on the next tick") {
    Scheduler s;
    const auto q = s.create_queue(4);
    std::vector<int> got;
    Tick woke = -1;
    s.spawn(periodic("rx", 0, 1, 1000, 0, [&](TaskContext& ctx) {
        if (ctx.reason() == WakeReason::QueueItem) {
            got.push_back(std::any_cast<int>(ctx.item()));
            woke = ctx.now();
        } else {
            ctx.queue_receive(q, 100);
        }
    }));
    s.spawn(periodic("tx", 1, 1, 1000, 3, [&](TaskContext& ctx) { ctx.queue_send(q, 42); }));
    s.run_until(10);
    CHECK(got == std::vector<int>{42});
    CHECK(woke == 4);
    CHECK(s.queue_stats(q).items_out == 1);
}

TEST_CASE("event bits") {
    Scheduler s;
    const auto g = s.create_event_group();

    SUBCASE("already set returns immediately") {
        std::optional<std::uint32_t> seen;
        s.event_set(g, 0b01);
        s.spawn(periodic("w", 0, 1, 1000, 0, [&](TaskContext& ctx) { seen = ctx.event_wait(g, 0b01, 10); }));
        s.advance_tick();
        CHECK(seen == 0b01u);
    }
    SUBCASE("wrong bit times out") {
        s.event_set(g, 0b01);
        Tick timeout_at = -1;
        s.spawn(periodic("w", 0, 1, 1000, 0, [&](TaskContext& ctx) {
            if (ctx.reason() == WakeReason::EventTimeout) timeout_at = ctx.now();
            else ctx.event_wait(g, 0b10, 3);
        }));
        s.run_until(10);
        CHECK(timeout_at == 3);
    }
    SUBCASE("broadcast to every waiter, clear on exit after all") {
        std::vector<std::pair<std::string, std::uint32_t>> seen;
        auto waiter = [&](std::string name) {
            return [&, name](TaskContext& ctx) {
                if (ctx.reason() == WakeReason::EventBits) seen.emplace_back(name, ctx.observed_bits());
                else ctx.event_wait(g, 0b100, 50, true);
            };
        };
        s.spawn(periodic("w1", 0, 1, 1000, 0, waiter("w1")));
        s.spawn(periodic("w2", 1, 1, 1000, 0, waiter("w2")));
        s.run_until(2);
        s.event_set(g, 0b100);
        CHECK(s.event_bits(g) == 0);
        s.run_until(4);
        REQUIRE(seen.size() == 2);
        CHECK(seen[0].second == 0b100u);
        CHECK(seen[1].second == 0b100u);
    }
}

TEST_CASE("suspend and resume") {
    Scheduler s;
    const auto h = s.spawn(periodic("p", 0, 1, 2));
    s.advance_tick();
    s.suspend(h);
    CHECK(s.status(h) == TaskStatus::Suspended);
    s.run_until(10);
    CHECK(s.activations(h) == 1);
    s.resume(h);
    s.run_until(12);
    CHECK(s.activations(h) == 2);
}

TEST_CASE("jitter is bounded, seeded and keeps release order") {
    auto make = [](std::uint64_t seed) {
        Scheduler s(SchedulerConfig{kDefaultPriorityOrder, seed, false});
        auto t = periodic("j", 1, 1, 10);
        t.jitter = 2;
        return std::pair{std::move(s), t};
    };
    auto [s1, t1] = make(7);
    const auto h = s1.spawn(t1);
    bool saw_offset = false;
    for (std::uint64_t k = 0; k < 500; ++k) {
        const auto r = s1.release_tick(h, k);
        const auto nominal = static_cast<Tick>(10 * k);
        CHECK(r >= std::max<Tick>(0, nominal - 2));
        CHECK(r <= nominal + 2);
        if (k > 0) CHECK(r > s1.release_tick(h, k - 1));
        saw_offset |= r != nominal;
    }
    CHECK(saw_offset);
    auto [s2, t2] = make(7);
    const auto h2 = s2.spawn(t2);
    auto [s3, t3] = make(8);
    const auto h3 = s3.spawn(t3);
    bool differs = false;
    for (std::uint64_t k = 0; k < 100; ++k) {
        CHECK(s2.release_tick(h2, k) == s1.release_tick(h, k));
        differs |= s3.release_tick(h3, k) != s1.release_tick(h, k);
    }
    CHECK(differs);
}

TEST_CASE("priority supremacy holds on every tick") {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 50; ++round) {
        Scheduler s;
        const auto set = oracle::random_task_set(rng);
        for (std::size_t i = 0; i < set.size(); ++i) {
            auto spec = periodic("t" + std::to_string(i), set[i].core, set[i].priority, set[i].period, set[i].phase);
            spec.cost_ticks = static_cast<int>(set[i].cost);
            s.spawn(spec);
        }
        std::vector<std::int64_t> executed(set.size(), 0);
        for (Tick t = 0; t < 200; ++t) {
            const auto entries = s.advance_tick();
            for (const auto& e : entries) {
                int best = 0;
                for (std::size_t i = 0; i < set.size(); ++i) {
                    if (set[i].core != e.core) continue;
                    const auto released = t < set[i].phase ? 0 : (t - set[i].phase) / set[i].period + 1;
                    if (released * set[i].cost > executed[i] && (best == 0 || set[i].priority < best))
                        best = set[i].priority;
                }
                if (best == 0) {
                    CHECK(e.task == -1);
                } else {
                    REQUIRE(e.task >= 0);
                    CHECK(set[static_cast<std::size_t>(e.task)].priority == best);
                }
            }
            for (const auto& e : entries)
                if (e.task >= 0) ++executed[static_cast<std::size_t>(e.task)];
        }
    }
}

TEST_CASE("trace matches the brute-force reference on random sets") {
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 200; ++round) {
        const auto set = oracle::random_task_set(rng);
        Scheduler s;
        for (std::size_t i = 0; i < set.size(); ++i) {
            auto spec = periodic("t" + std::to_string(i), set[i].core, set[i].priority, set[i].period, set[i].phase);
            spec.cost_ticks = static_cast<int>(set[i].cost);
            s.spawn(spec);
        }
        s.run_until(300);
        const auto ref = oracle::reference_trace(set, 300);
        REQUIRE(s.trace().size() == ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) {
            INFO("round " << round << " entry " << i);
            REQUIRE(s.trace()[i].tick == ref[i].tick);
            REQUIRE(s.trace()[i].core == ref[i].core);
            REQUIRE(s.trace()[i].task == ref[i].task);
        }
    }
}

TEST_CASE("determinism and CSV export") {
    auto run = [] {
        Scheduler s(SchedulerConfig{kDefaultPriorityOrder, 5, true});
        auto a = periodic("a", 0, 1, 4);
        a.jitter = 1;
        s.spawn(a);
        s.spawn(periodic("b", 0, 2, 7));
        s.run_until(100);
        std::ostringstream out;
        s.write_trace_csv(out);
        return out.str();
    };
    const auto csv = run();
    CHECK(csv == run());
    CHECK(csv.rfind("tick,core,task\n0,0,", 0) == 0);
    CHECK(csv.find(",1,IDLE\n") != std::string::npos);
}

TEST_CASE("handlers may spawn tasks") {
    Scheduler s;
    bool spawned = false;
    s.spawn(periodic("parent", 0, 1, 1000, 0, [&](TaskContext& ctx) {
        if (!spawned) ctx.scheduler().spawn(periodic("child", 1, 1, 1000, 1));
        spawned = true;
    }));
    s.run_until(3);
    REQUIRE(s.find("child").has_value());
    CHECK(s.activations(*s.find("child")) == 1);
}
