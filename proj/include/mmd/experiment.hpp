#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mmd/coded_access.hpp"
#include "mmd/config.hpp"
#include "mmd/csi_update.hpp"
#include "mmd/metrics.hpp"
#include "mmd/state_evolution.hpp"

namespace mmd {

/// Detector names accepted by the harness:
///   dsamp, amp, dsamp-nominmax, lmmse                       (uncoded frames)
///   idsamp, idsamp-nojudge, coded-nosic, coded-nointerleave (coded frames)
///   uncoded-hard   one DS-AMP pass with hard decisions on a coded frame
///   coded          coded receiver configured by the coded.* flags
const std::vector<std::string>& known_algorithms();
bool is_coded_algorithm(const std::string& name);
CodedFlags coded_flags_for(const std::string& name, const CodedFlags& custom);

struct ExperimentSpec {
  SystemConfig sys;
  std::string axis = "snr_db";  ///< snr_db | j | lambda | nr | t0
  std::vector<double> values;
  std::vector<std::string> algorithms;
  int frames = 200;
  bool paired = false;          ///< all algorithms see the same frames at a given point
  double damping = 1.0;
  int fec_iters = 8;
  double fec_scale = 0.75;
  CodedFlags coded;
  bool coded_enabled = false;
  int ls = 20;
  int ld = 100;
  int nbar = 5;

  static ExperimentSpec from_config(const ConfigMap& cfg);
  ConfigMap to_config() const;
  void validate() const;
};

/// Scenario at one sweep point.
SystemConfig apply_axis(SystemConfig sys, const std::string& axis, double value);

/// Seed of frame `frame` at a sweep point; the algorithm is folded in unless paired.
std::uint64_t frame_seed(const ExperimentSpec& spec, const std::string& algorithm, double axis_value, int frame);

/// Error tallies of one frame.
ErrorCounts run_frame(const ExperimentSpec& spec, const std::string& algorithm, const SystemConfig& sys,
                      std::uint64_t seed);

MetricRow run_point(const ExperimentSpec& spec, const std::string& algorithm, double axis_value);

/// Rows ordered by sweep value, then by the listed algorithm order.
std::vector<MetricRow> run_sweep(const ExperimentSpec& spec);

void write_sweep_csv(std::ostream& out, const ExperimentSpec& spec, const std::vector<MetricRow>& rows);
/// "-" writes to standard output. Throws IoError if the path cannot be written.
void run_sweep_to_file(const ExperimentSpec& spec, const std::string& path);

SeConfig se_config_from(const ConfigMap& cfg);
void write_se_csv(std::ostream& out, const SeConfig& cfg, const SeTrace& trace);

TrackingConfig tracking_config_from(const ConfigMap& cfg);
void write_tracking_csv(std::ostream& out, const TrackingConfig& cfg, const std::vector<TrackingResult>& runs);

/// Runs `fn` with an output stream opened on `path` ("-" is stdout).
template <typename Fn>
void with_output(const std::string& path, Fn&& fn);

}  // namespace mmd

#include <fstream>
#include <iostream>

#include "mmd/error.hpp"

namespace mmd {

template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  fn(f);
  f.flush();
  if (!f) throw IoError("write to '" + path + "' failed");
}

}  // namespace mmd
