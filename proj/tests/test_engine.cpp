#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "mcsim/engine.hpp"

using namespace mcsim;

TEST_CASE("schedule fires at now+delay and handler observes fire_at") {
  Engine eng;
  std::vector<std::uint64_t> seen;
  eng.schedule(seconds(5), "a", [&] { seen.push_back(eng.now().ns); });
  eng.run_until(SimTime{seconds(10).ns});
  REQUIRE(seen.size() == 1);
  CHECK(seen[0] == 5'000'000'000ull);
  CHECK(eng.now().ns == 10'000'000'000ull);
}

TEST_CASE("simultaneous events fire in insertion order") {
  Engine eng;
  std::vector<int> order;
  eng.schedule(seconds(1), "first", [&] { order.push_back(1); });
  eng.schedule(seconds(1), "second", [&] { order.push_back(2); });
  eng.schedule(seconds(1), "third", [&] { order.push_back(3); });
  eng.run_until(SimTime{seconds(1).ns});
  CHECK(order == std::vector<int>{1, 2, 3});
}

TEST_CASE("negative delay rejected") {
  Engine eng;
  CHECK_THROWS_AS(eng.schedule(nanoseconds(-1), "bad", [] {}), ValidationError);
}

TEST_CASE("cancel semantics") {
  Engine eng;
  int fired = 0;
  auto h = eng.schedule(seconds(1), "x", [&] { ++fired; });

  SUBCASE("pending event cancels once and never fires") {
    CHECK(eng.cancel(h));
    CHECK_FALSE(eng.cancel(h));
    eng.run_until(SimTime{seconds(2).ns});
    CHECK(fired == 0);
  }

  SUBCASE("cancel after fire returns false") {
    eng.run_until(SimTime{seconds(2).ns});
    CHECK(fired == 1);
    CHECK_FALSE(eng.cancel(h));
  }

  SUBCASE("unknown handle returns false") {
    CHECK_FALSE(eng.cancel(EventHandle{999}));
  }
}

TEST_CASE("run_until boundary and transitive processing") {
  Engine eng;

  SUBCASE("empty queue advances the clock") {
    CHECK(eng.run_until(SimTime{seconds(10).ns}) == 0);
    CHECK(eng.now().ns == 10'000'000'000ull);
  }

  SUBCASE("boundary is inclusive") {
    int n = 0;
    eng.schedule(seconds(1), "a", [&] { ++n; });
    eng.schedule(seconds(2), "b", [&] { ++n; });
    eng.schedule(seconds(3), "c", [&] { ++n; });
    CHECK(eng.run_until(SimTime{seconds(2).ns}) == 2);
    CHECK(n == 2);
  }

  SUBCASE("handler-scheduled events within t_end run in the same call") {
    std::vector<std::string> log;
    eng.schedule(seconds(1), "outer", [&] {
      log.push_back("outer");
      eng.schedule(seconds(1), "inner", [&] { log.push_back("inner"); });
    });
    CHECK(eng.run_until(SimTime{seconds(2).ns}) == 2);
    CHECK(log == std::vector<std::string>{"outer", "inner"});
  }

  SUBCASE("t_end before now rejected") {
    eng.run_until(SimTime{seconds(5).ns});
    CHECK_THROWS_AS(eng.run_until(SimTime{seconds(4).ns}), ValidationError);
  }
}

TEST_CASE("cancelled events are not counted as processed") {
  Engine eng;
  auto h = eng.schedule(seconds(1), "x", [] {});
  eng.schedule(seconds(1), "y", [] {});
  eng.cancel(h);
  CHECK(eng.run_until(SimTime{seconds(2).ns}) == 1);
}

TEST_CASE("property: random event sets replay to identical logs") {
  using Log = std::vector<std::tuple<std::uint64_t, std::uint64_t, std::string>>;
  auto run_once = [](unsigned seed) {
    Engine eng;
    Log log;
    eng.set_event_sink([&](SimTime t, std::uint64_t seq, const std::string& l) {
      log.emplace_back(t.ns, seq, l);
    });
    std::mt19937 gen(seed);
    std::uniform_int_distribution<std::int64_t> delay(0, 1'000'000);
    std::vector<EventHandle> handles;
    for (int i = 0; i < 400; ++i) {
      handles.push_back(
          eng.schedule(nanoseconds(delay(gen)), "e" + std::to_string(i), [] {}));
    }
    // Cancel a deterministic subset.
    for (std::size_t i = 0; i < handles.size(); i += 7) eng.cancel(handles[i]);
    eng.run_until(SimTime{milliseconds(2).ns});
    return log;
  };
  for (unsigned seed : {1u, 2u, 42u}) {
    auto a = run_once(seed);
    auto b = run_once(seed);
    REQUIRE(a == b);
    // Processing order is the strict total order (fire_at, seq).
    for (std::size_t i = 1; i < a.size(); ++i) {
      auto [t0, s0, l0] = a[i - 1];
      auto [t1, s1, l1] = a[i];
      CHECK((t0 < t1 || (t0 == t1 && s0 < s1)));
    }
  }
}

TEST_CASE("clock is monotone across processed events") {
  Engine eng;
  std::uint64_t last = 0;
  std::mt19937 gen(7);
  std::uniform_int_distribution<std::int64_t> delay(0, 500);
  std::function<void(int)> chain = [&](int depth) {
    CHECK(eng.now().ns >= last);
    last = eng.now().ns;
    if (depth < 50) {
      eng.schedule(nanoseconds(delay(gen)), "c", [&chain, depth] { chain(depth + 1); });
    }
  };
  eng.schedule(nanoseconds(0), "start", [&] { chain(0); });
  eng.run_until(SimTime{microseconds(100).ns});
}

TEST_CASE("rng streams: seed and id determinism, independence") {
  RngRegistry a(123), b(123), c(124);
  auto& s1 = a.stream("channel:leg1");
  auto& s2 = b.stream("channel:leg1");
  for (int i = 0; i < 64; ++i) CHECK(s1.next_u64() == s2.next_u64());

  // Different id or different master seed diverge.
  CHECK(a.stream("channel:leg2").next_u64() != b.stream("channel:leg1").next_u64());
  CHECK(c.stream("channel:leg1").next_u64() != a.stream("channel:leg1").next_u64());

  // Creation order does not matter.
  RngRegistry d(9), e(9);
  auto& dx = d.stream("x");
  auto& dy = d.stream("y");
  auto& ey = e.stream("y");
  auto& ex = e.stream("x");
  CHECK(dx.next_u64() == ex.next_u64());
  CHECK(dy.next_u64() == ey.next_u64());
}

TEST_CASE("rng unit draws are in [0,1) and counted") {
  RngStream s(1, "t");
  for (int i = 0; i < 1000; ++i) {
    double u = s.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(s.draw_count() == 1000);
  s.pick_index(5);
  CHECK(s.draw_count() == 1001);
}

TEST_CASE("duration rounding: ties up, exact integer ratios") {
  CHECK(ratio_to_ns(12'000, 12'000'000).ns == 1'000'000);  // 1 ms
  CHECK(ratio_to_ns(12'000, 100'000'000).ns == 120'000);   // 120 us
  CHECK(ratio_to_ns(0, 5).ns == 0);
  CHECK(ratio_to_ns(1, 3).ns == 333'333'333);
  CHECK(ratio_to_ns(3, 2).ns == 1'500'000'000);
  CHECK(ratio_to_ns(1, 2'000'000'000).ns == 1);  // 0.5 ns rounds up
  CHECK(duration_from_ms(0.5).ns == 500'000);
  CHECK(duration_from_ms(0.0000005).ns == 1);  // 0.5 ns, ties up
  CHECK_THROWS_AS(duration_from_ms(-1.0), ValidationError);
}
