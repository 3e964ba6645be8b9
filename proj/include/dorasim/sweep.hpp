/*
 * SPDX-License-Identifier: GPL-2.0-only
 */

#pragma once

#include "dorasim/config.hpp"
#include "dorasim/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <tuple>
#include <vector>

namespace dorasim {

struct SweepJob
{
    Protocol protocol;
    Duration t_ipa;
    std::uint64_t seed;
};

/// Jobs in output order: protocol, then t_ipa, then seed.
inline std::vector<SweepJob> sweep_jobs(const ExperimentConfig& exp)
{
    std::vector<Protocol> protocols = exp.sweep.protocols;
    std::sort(protocols.begin(), protocols.end());
    std::vector<Duration> points = exp.sweep.t_ipa;
    std::sort(points.begin(), points.end());
    std::vector<SweepJob> jobs;
    for (Protocol p : protocols)
    {
        for (Duration t : points)
        {
            for (std::size_t s = 0; s < exp.sweep.seeds; ++s)
            {
                jobs.push_back(SweepJob{p, t, exp.scenario.seed + s});
            }
        }
    }
    return jobs;
}

inline ScenarioConfig job_config(const ScenarioConfig& base, const SweepJob& job)
{
    ScenarioConfig cfg = base;
    cfg.protocol = job.protocol;
    cfg.t_ipa = job.t_ipa;
    cfg.seed = job.seed;
    return cfg;
}

/**
 * Runs every job of the sweep. Each run is independent, so they are spread
 * over `threads` workers (0 picks hardware concurrency); the result order
 * is fixed by sweep_jobs() whatever the thread count.
 */
inline std::vector<RunMetrics> run_sweep(const ExperimentConfig& exp, unsigned threads = 0)
{
    exp.scenario.validate();
    exp.sweep.validate();
    const std::vector<SweepJob> jobs = sweep_jobs(exp);
    std::vector<RunMetrics> out(jobs.size());
    if (threads == 0)
    {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(jobs.size(), 1)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++)
        {
            try
            {
                out[i] = run_scenario(job_config(exp.scenario, jobs[i]));
            }
            catch (...)
            {
                std::lock_guard lock(failure_mu);
                if (!failure)
                {
                    failure = std::current_exception();
                }
                next = jobs.size();
            }
        }
    };
    if (threads == 1)
    {
        worker();
    }
    else
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
        {
            pool.emplace_back(worker);
        }
    }
    if (failure)
    {
        std::rethrow_exception(failure);
    }
    return out;
}

} // namespace dorasim
