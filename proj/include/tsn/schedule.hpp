#pragma once

#include "rational.hpp"

#include <string>
#include <vector>

namespace tsn {

enum class Scheduler { CbsTas, CbsSp };
enum class Mode { NonPreemption, Preemption };

enum class WindowKind { TT, AVB, Syn, GuardBand, Overhead };

struct GclWindow {
    WindowKind kind;
    Rat offset;  // ns from the hyperperiod start
    Rat length;  // ns
};

// One egress port's gate schedule and shaper configuration.
struct PortSchedule {
    std::string port;
    Rat hyperperiod = 0;  // T_GCL ns
    Scheduler scheduler = Scheduler::CbsTas;
    Mode mode = Mode::NonPreemption;
    Rat idle_slope_a = 0;  // bits/ns
    Rat idle_slope_b = 0;
    std::vector<GclWindow> windows;
};

}  // namespace tsn
