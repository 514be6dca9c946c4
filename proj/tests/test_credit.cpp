#include <tsn/credit.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace tsn;

namespace {

CreditParams params(AvbClass cls, Rat idle, Rat link, Rat interfering, Rat own) {
    return {cls, idle, idle - link, link, std::move(interfering), std::move(own)};
}

const Rat C100 = Rat(1, 10);  // 100 Mbit/s in bits/ns

}  // namespace

TEST_CASE("credit parameter validation", "[credit]") {
    CHECK_NOTHROW(params(AvbClass::A, Rat(6, 100), C100, Rat(12144), Rat(12144)).validate());
    CHECK_THROWS_AS(params(AvbClass::A, Rat(0), C100, Rat(0), Rat(0)).validate(), CreditError);
    CHECK_THROWS_AS(params(AvbClass::A, C100, C100, Rat(0), Rat(0)).validate(), CreditError);
    CreditParams bad = params(AvbClass::A, Rat(6, 100), C100, Rat(0), Rat(0));
    bad.send_slope = Rat(-1, 100);  // I - S != C
    CHECK_THROWS_AS(bad.validate(), CreditError);
    CreditParams neg = params(AvbClass::A, Rat(6, 100), C100, Rat(-1), Rat(0));
    CHECK_THROWS_AS(neg.validate(), CreditError);
}

TEST_CASE("class A credit bounds", "[credit]") {
    // C = 100 Mbit/s, I^A = 60 Mbit/s, 1518 B frames
    CreditParams pa = params(AvbClass::A, Rat(6, 100), C100, Rat(12144), Rat(12144));
    CreditBounds b = credit_bounds(pa);
    CHECK(b.v_max == Rat(72864, 10));   // 7286.4 bits
    CHECK(b.v_min == Rat(-48576, 10));  // -4857.6 bits
}

TEST_CASE("class B credit bounds need class A", "[credit]") {
    CreditParams pa = params(AvbClass::A, Rat(6, 100), C100, Rat(12144), Rat(12144));
    CreditParams pb = params(AvbClass::B, Rat(15, 1000), C100, Rat(12144), Rat(12144));
    CHECK_THROWS_AS(credit_bounds(pb), CreditError);
    CreditBounds b = credit_bounds(pb, pa);
    // I^B * (Lbar^B/C + L^A/C - (Lbar^A/C)(I^A/S^A)), the last term additive
    Rat blk = Rat(12144) / C100;
    CHECK(b.v_max == Rat(15, 1000) * (blk + blk + blk * Rat(6, 100) / Rat(4, 100)));
    CHECK(b.v_min == blk * pb.send_slope);
}

TEST_CASE("phase times", "[credit]") {
    CreditParams pa = params(AvbClass::A, Rat(6, 100), C100, Rat(12144), Rat(12144));
    PhaseTimes pt = phase_times(pa, Rat(72864, 10), Rat(-48576, 10));
    CHECK(pt.dt_plus == Rat(121440));   // 121.44 us
    CHECK(pt.dt_minus == Rat(303600));  // 303.6 us
    CHECK(phase_times(pa, Rat(0), Rat(0)).dt_plus == 0);
    CHECK_THROWS_AS(phase_times(pa, Rat(-1), Rat(0)), CreditError);
    CHECK_THROWS_AS(phase_times(pa, Rat(0), Rat(1)), CreditError);
}

TEST_CASE("lemma timing differences equal the phase-time differences", "[credit][prop]") {
    std::mt19937_64 rng(31);
    for (int it = 0; it < 50; ++it) {
        Rat ia(1 + static_cast<std::int64_t>(rng() % 7), 100);
        Rat ib(1 + static_cast<std::int64_t>(rng() % 7), 100);
        if (ia == ib) ib += Rat(1, 200);
        CreditParams pa = params(AvbClass::A, ia, C100, Rat(8000), Rat(4000));
        CreditParams pb = params(AvbClass::B, ib, C100, Rat(8000), Rat(6000));
        CreditBounds ba = credit_bounds(pa);
        CreditBounds bb = credit_bounds(pb, pa);
        LemmaTimes lt = lemma_times(pa, pb, ba.v_max, ba.v_min, bb.v_max, bb.v_min);
        REQUIRE(lt.a1_idle == bb.v_max / pb.idle_slope - ba.v_max / pa.idle_slope);
        REQUIRE(lt.a1_send == (bb.v_max - bb.v_min) / pb.send_slope -
                                  (ba.v_max - ba.v_min) / pa.send_slope);
        REQUIRE(lt.a2_a == (ba.v_max - ba.v_min) / pa.send_slope - ba.v_max / pa.idle_slope);
        REQUIRE(lt.a2_b == (bb.v_max - bb.v_min) / pb.send_slope - bb.v_max / pb.idle_slope);
    }
}

TEST_CASE("credit line intersection and zero crossing", "[credit]") {
    // literals in bits/us to match the worked geometry
    CreditParams pa = params(AvbClass::A, Rat(60), Rat(100), Rat(0), Rat(0));
    CreditParams pb = params(AvbClass::B, Rat(15), Rat(100), Rat(0), Rat(0));
    GeometryAnchors g;
    g.t_m = 0;
    g.t_m1 = 10;
    g.vmax_a_m = 100;
    g.vmax_b_m = 40;
    g.t_1 = 0;
    g.t_2 = 10;
    g.v_1 = 100;
    g.v_2 = -50;
    g.vmax_b_1 = 40;
    g.vmax_b_2 = 10;
    CreditGeometry geo = credit_geometry(pa, pb, g);
    CHECK(geo.t_same == Rat(-4, 3));
    CHECK(geo.v_same == Rat(20));
    // line-intersection oracle: both rising lines meet there
    CHECK(g.vmax_a_m + pa.idle_slope * geo.t_same ==
          g.vmax_b_m + pb.idle_slope * geo.t_same);
    CHECK(geo.v_same == g.vmax_a_m + pa.idle_slope * geo.t_same);
    CHECK(geo.k == Rat(2));
    CHECK(geo.t_eq == Rat(20, 3));
    // linear-interpolation oracle: the segment through (t1,v1),(t2,v2) is zero at t_eq
    CHECK(g.v_1 + (g.v_2 - g.v_1) * (geo.t_eq - g.t_1) / (g.t_2 - g.t_1) == 0);
    CHECK(geo.v_mid_b == Rat(20));
    CHECK_FALSE(geo.intersection_at_midpoint);

    // coincident start: intersection at the anchor itself
    g.vmax_b_m = g.vmax_a_m;
    CreditGeometry same = credit_geometry(pa, pb, g);
    CHECK(same.t_same == g.t_m);
    CHECK(same.v_same == g.vmax_a_m);

    CHECK_THROWS_AS(credit_geometry(pa, pa, g), CreditError);
    g.v_1 = -1;
    CHECK_THROWS_AS(credit_geometry(pa, pb, g), CreditError);
}

TEST_CASE("intersection never lands on the segment midpoint", "[credit][prop]") {
    std::mt19937_64 rng(37);
    for (int it = 0; it < 100; ++it) {
        Rat ia(1 + static_cast<std::int64_t>(rng() % 7), 100);
        Rat ib(1 + static_cast<std::int64_t>(rng() % 7), 100);
        if (ia == ib) ib += Rat(1, 200);
        std::int64_t la = 8 * (64 + static_cast<std::int64_t>(rng() % 1455));
        std::int64_t lb = 8 * (64 + static_cast<std::int64_t>(rng() % 1455));
        CreditParams pa = params(AvbClass::A, ia, C100, Rat(12144), Rat(la));
        CreditParams pb = params(AvbClass::B, ib, C100, Rat(12144), Rat(lb));
        CreditBounds ba = credit_bounds(pa);
        CreditBounds bb = credit_bounds(pb, pa);
        PhaseTimes pt = phase_times(pa, ba.v_max, ba.v_min);
        GeometryAnchors g;
        g.t_m = 0;
        g.t_m1 = pt.dt_minus;
        g.vmax_a_m = ba.v_max;
        g.vmax_b_m = bb.v_max;
        g.t_1 = 0;
        g.t_2 = pt.dt_minus;
        g.v_1 = ba.v_max;
        g.v_2 = ba.v_min;
        g.vmax_b_1 = bb.v_max;
        g.vmax_b_2 = bb.v_max + pb.idle_slope * pt.dt_minus;
        CreditGeometry geo = credit_geometry(pa, pb, g);
        REQUIRE_FALSE(geo.intersection_at_midpoint);
        // the descending class A credit runs at S^A here, so the zero crossing
        // must also satisfy V_max + S.t = 0
        REQUIRE(g.v_1 + pa.send_slope * geo.t_eq == 0);
    }
}

TEST_CASE("trace oracle: no arrivals", "[credit]") {
    CreditParams pa = params(AvbClass::A, Rat(6, 100), C100, Rat(12144), Rat(12144));
    CreditTrace tr = credit_trace_oracle(pa, {{Rat(0), Rat(1000000)}}, {},
                                         IntegrationMode::NonPreemption);
    CHECK(tr.max_credit() == 0);
    CHECK(tr.min_credit() == 0);
    for (const auto& e : tr.events) CHECK(e.credit == 0);
}

TEST_CASE("trace oracle: single frame dips and recovers", "[credit]") {
    CreditParams pa = params(AvbClass::A, Rat(6, 100), C100, Rat(12144), Rat(1000));
    CreditTrace tr = credit_trace_oracle(pa, {{Rat(0), Rat(10000000)}}, {{Rat(0), Rat(1000)}},
                                         IntegrationMode::NonPreemption);
    CHECK(tr.max_credit() == 0);
    CHECK(tr.min_credit() == Rat(1000) / C100 * pa.send_slope);  // -400
    REQUIRE(tr.events.size() >= 2);
    CHECK(tr.events[0].time == 0);
    CHECK(tr.events[0].cause == CreditCause::SendDrain);
    CHECK(tr.events[1].time == Rat(10000));  // transmission end
    CHECK(tr.events[1].credit == Rat(-400));
    CHECK(tr.events[1].cause == CreditCause::IdleGain);
    CHECK(tr.end_credit == 0);
}

TEST_CASE("trace oracle: frozen while the gate is closed", "[credit]") {
    CreditParams pa = params(AvbClass::A, Rat(6, 100), C100, Rat(12144), Rat(1000));
    CreditTrace tr = credit_trace_oracle(pa, {{Rat(500), Rat(10000000)}}, {{Rat(0), Rat(1000)}},
                                         IntegrationMode::NonPreemption);
    REQUIRE(tr.events.size() >= 2);
    CHECK(tr.events[0].cause == CreditCause::Frozen);
    CHECK(tr.events[1].time == Rat(500));
    CHECK(tr.events[1].credit == 0);
    CHECK(tr.events[1].cause == CreditCause::SendDrain);
}

TEST_CASE("trace oracle: non-preemption start is length-aware", "[credit]") {
    CreditParams pa = params(AvbClass::A, Rat(6, 100), C100, Rat(12144), Rat(1000));
    // 1000 bits need 10 us; the gate window is only 5 us, so the frame waits
    CreditTrace tr = credit_trace_oracle(pa, {{Rat(0), Rat(5000)}}, {{Rat(0), Rat(1000)}},
                                         IntegrationMode::NonPreemption, {}, Rat(20000));
    CHECK(tr.max_credit() == pa.idle_slope * Rat(5000));
    CHECK(tr.min_credit() == 0);
    for (const auto& e : tr.events) CHECK(e.cause != CreditCause::SendDrain);
}

TEST_CASE("trace oracle: preemption suspends with frozen credit", "[credit]") {
    CreditParams pa = params(AvbClass::A, Rat(6, 100), C100, Rat(12144), Rat(1000));
    CreditTrace tr = credit_trace_oracle(pa, {{Rat(0), Rat(5000)}, {Rat(6000), Rat(10000000)}},
                                         {{Rat(0), Rat(1000)}}, IntegrationMode::Preemption);
    // half the frame before the gap, half after; credit frozen in between
    CHECK(tr.min_credit() == Rat(-400));
    REQUIRE(tr.events.size() >= 4);
    CHECK(tr.events[0].cause == CreditCause::SendDrain);
    CHECK(tr.events[1].time == Rat(5000));
    CHECK(tr.events[1].credit == Rat(-200));
    CHECK(tr.events[1].cause == CreditCause::Frozen);
    CHECK(tr.events[2].time == Rat(6000));
    CHECK(tr.events[2].credit == Rat(-200));
    CHECK(tr.events[2].cause == CreditCause::SendDrain);
    CHECK(tr.events[3].time == Rat(11000));
    CHECK(tr.events[3].credit == Rat(-400));
    CHECK(tr.end_credit == 0);
}

namespace {

// Saturated class A scenario: the lower-priority blocker (expressed as a busy
// interval) holds the link exactly long enough for the credit to climb to
// V_max, then k+1 back-to-back frames drain it to V_min.
struct SaturatedA {
    CreditParams p;
    std::vector<Interval> busy;
    std::vector<FrameArrival> arrivals;
    Rat t_peak;
    Rat t_min;
};

SaturatedA saturated_a(std::mt19937_64& rng) {
    Rat ia(1 + static_cast<std::int64_t>(rng() % 8), 100);
    std::int64_t k = 1 + static_cast<std::int64_t>(rng() % 4);
    Rat la(8 * (64 + static_cast<std::int64_t>(rng() % 1455)));
    Rat sa = ia - C100;
    Rat lbe = Rat(k) * -sa * la / ia;  // blocker sized so the climb peaks at V_max
    SaturatedA s{params(AvbClass::A, ia, C100, lbe, la), {}, {}, {}, {}};
    s.busy.push_back({Rat(0), lbe / C100});
    for (std::int64_t j = 0; j <= k; ++j) s.arrivals.push_back({Rat(0), la});
    s.t_peak = lbe / C100;
    s.t_min = s.t_peak + Rat(k + 1) * la / C100;
    return s;
}

}  // namespace

TEST_CASE("saturated scenarios: trace extrema equal the closed forms exactly",
          "[credit][prop]") {
    std::mt19937_64 rng(41);
    for (int it = 0; it < 120; ++it) {
        SaturatedA s = saturated_a(rng);
        CreditBounds b = credit_bounds(s.p);
        CreditTrace tr = credit_trace_oracle(s.p, {{Rat(0), Rat(100000000)}}, s.arrivals,
                                             IntegrationMode::NonPreemption, s.busy);
        REQUIRE(tr.max_credit() == b.v_max);
        REQUIRE(tr.min_credit() == b.v_min);
        // phase times are visible in the trace: climb ends at the peak, the
        // descent bottoms out (V_max - V_min)/|S| later
        PhaseTimes pt = phase_times(s.p, b.v_max, b.v_min);
        Rat t_peak = -1, t_min = -1;
        for (const auto& e : tr.events) {
            if (e.credit == b.v_max && t_peak < 0) t_peak = e.time;
            if (e.credit == b.v_min && t_min < 0) t_min = e.time;
        }
        REQUIRE(t_peak == pt.dt_plus);
        REQUIRE(t_min - t_peak == pt.dt_minus);
        REQUIRE(t_peak == s.t_peak);
        REQUIRE(t_min == s.t_min);
    }
}

TEST_CASE("saturated class B scenarios match the printed V_max^B form", "[credit][prop]") {
    std::mt19937_64 rng(43);
    for (int it = 0; it < 120; ++it) {
        SaturatedA s = saturated_a(rng);
        Rat ib(1 + static_cast<std::int64_t>(rng() % 8), 200);
        Rat lb(8 * (64 + static_cast<std::int64_t>(rng() % 1455)));
        CreditParams pb = params(AvbClass::B, ib, C100, s.p.max_interfering, lb);
        CreditBounds bb = credit_bounds(pb, s.p);
        // worst case for B: the blocker, then class A drains its full credit
        // with back-to-back frames; B's single frame waits the whole time
        std::vector<Interval> busy{{Rat(0), s.t_min}};
        CreditTrace up = credit_trace_oracle(pb, {{Rat(0), Rat(100000000)}}, {{Rat(0), lb}},
                                             IntegrationMode::NonPreemption, busy);
        REQUIRE(up.max_credit() == bb.v_max);
        // deepest dip: a frame sent from zero credit
        CreditTrace down = credit_trace_oracle(pb, {{Rat(0), Rat(100000000)}}, {{Rat(0), lb}},
                                               IntegrationMode::NonPreemption);
        REQUIRE(down.min_credit() == bb.v_min);
    }
}

TEST_CASE("trace invariants: piecewise slopes and reset discipline", "[credit][prop]") {
    std::mt19937_64 rng(47);
    for (int it = 0; it < 40; ++it) {
        Rat ia(1 + static_cast<std::int64_t>(rng() % 8), 100);
        CreditParams p = params(AvbClass::A, ia, C100, Rat(12144), Rat(12144));
        std::vector<FrameArrival> arr;
        int n = 1 + static_cast<int>(rng() % 5);
        for (int i = 0; i < n; ++i)
            arr.push_back({Rat(static_cast<std::int64_t>(rng() % 200000)),
                           Rat(8 * (64 + static_cast<std::int64_t>(rng() % 1455)))});
        std::vector<Interval> gates{{Rat(0), Rat(50000)}, {Rat(80000), Rat(100000000)}};
        CreditTrace tr = credit_trace_oracle(p, gates, arr, IntegrationMode::Preemption);
        REQUIRE(!tr.events.empty());
        auto slope_of = [&](CreditCause cause) {
            switch (cause) {
                case CreditCause::IdleGain: return p.idle_slope;
                case CreditCause::SendDrain: return p.send_slope;
                default: return Rat(0);
            }
        };
        Rat t = 0, c = 0, slope = 0;
        for (const auto& e : tr.events) {
            REQUIRE(e.time >= t);
            // each event's credit follows from the previous slope in force
            REQUIRE(e.credit == c + slope * (e.time - t));
            if (e.cause == CreditCause::Reset) REQUIRE(e.credit > 0);
            t = e.time;
            c = (e.cause == CreditCause::Reset) ? Rat(0) : e.credit;
            slope = slope_of(e.cause);
        }
        REQUIRE(tr.end_credit == c + slope * (tr.end_time - t));
        REQUIRE(tr.end_credit == 0);
    }
}
