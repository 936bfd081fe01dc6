// SPDX-License-Identifier: Apache-2.0

#ifndef UBA_QUAD_SIM_HPP
#define UBA_QUAD_SIM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uba/schedule.hpp"

namespace uba
{

//
// SGD on 0.5 (W - W*)^T H (W - W*) in the eigenbasis of H. Each coordinate evolves as
//
//   v_j <- (1 - eta_t lambda_j) v_j - eta_t sigma sqrt(lambda_j) z_{t,j},  z ~ N(0, 1),
//
// so the gradient noise has covariance sigma^2 H.
//
struct QuadModel
{
  std::vector<double> spectrum{1.0};
  std::vector<double> init_coeffs{1.0};
  double sigma = 0.0;
  std::uint64_t seed = 0;

  std::vector<Diagnostic> check() const;
  void validate() const;

  double initial_gap() const;           // 0.5 sum lambda_j s_j^2
  double init_dist_sq() const;          // sum s_j^2
  double lambda_lo() const;
  double lambda_hi() const;
};

struct TrajectoryStats
{
  std::vector<std::int64_t> steps;  // recorded update counts (0 = initial point)
  std::vector<double> mean_gap;
  std::vector<double> stderr_gap;
  std::vector<double> worst_direction_contraction;  // prod (1 - eta_t lambda_j)^2 per j
  std::vector<double> log_contraction;              // same, log domain
  std::int64_t replicas = 0;
};

inline constexpr std::int64_t default_replicas = 1024;
inline constexpr double divergence_gap = 1e300;

// Record stride: every step up to 1000 steps, ceil(steps / 1000) beyond.
std::int64_t record_stride(std::int64_t steps);

std::uint64_t splitmix64(std::uint64_t x);

// Runs the first `steps` iterations of spec's trace on the model.
TrajectoryStats simulate(const QuadModel &model, const ScheduleSpec &spec, std::int64_t steps,
                         std::int64_t replicas = default_replicas);

struct NamedSchedule
{
  std::string name;
  ScheduleSpec spec;
};

struct ComparisonRow
{
  std::string schedule;
  double final_gap = 0.0;
  double final_stderr = 0.0;
  double worst_contraction_log = 0.0;  // max_j of the log contraction
};

// All specs must share total_steps.
std::vector<ComparisonRow> compare_schedules(const QuadModel &model,
                                             std::span<const NamedSchedule> specs,
                                             std::int64_t steps,
                                             std::int64_t replicas = default_replicas);

}  // namespace uba

#endif  // UBA_QUAD_SIM_HPP
