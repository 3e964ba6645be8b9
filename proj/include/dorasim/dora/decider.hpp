/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/medium.hpp"
#include "dorasim/time.hpp"

#include <span>

namespace dorasim::dora {

/**
 * Wake-up signal decider.
 *
 * Accepts when the trace holds power >= threshold without interruption for
 * at least min_duration. Both bounds are inclusive. A segment below the
 * threshold, or a gap between segments, restarts the run.
 */
inline bool decide_wakeup(std::span<const PowerSegment> trace, double threshold_mw, Duration min_duration)
{
    Duration run{};
    SimTime run_end{};
    bool in_run = false;
    for (const PowerSegment& seg : trace)
    {
        if (seg.power_mw < threshold_mw)
        {
            in_run = false;
            run = Duration{};
            continue;
        }
        if (!in_run || seg.start != run_end)
        {
            run = Duration{};
            in_run = true;
        }
        run += seg.end - seg.start;
        run_end = seg.end;
        if (run >= min_duration)
        {
            return true;
        }
    }
    return min_duration.count() == 0;
}

} // namespace dorasim::dora
