#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scopekit/imaging.hpp"

namespace scopekit {

struct FlowField {
  ScalarField u;  // pixels/frame
  ScalarField v;
  /// Pixels whose windowed structure tensor was well conditioned.
  Mask confident;
};

struct FlowOptions {
  int window = 7;
  int iterations = 5;
  /// Minimum eigenvalue of the window-averaged structure tensor.
  double min_eigenvalue = 1e-6;
};

/// Iterative Lucas-Kanade flow from I1 to I2 (single channel or luma), with
/// central-difference gradients of I1. Low-confidence pixels carry zero flow.
FlowField lk_flow(const ImageBuffer& I1, const ImageBuffer& I2, const FlowOptions& opts = {});

/// Mean of du/dx + dv/dy (central differences) over confident pixels whose
/// four neighbours are confident too. Throws NoConfidentPixels.
double divergence(const FlowField& f);

/// Uniformly sampled signal.
struct ScalarSignal {
  double rate_hz = 1.0;
  std::vector<double> values;
};

/// Per-frame mean flow divergence of consecutive frames; frames without
/// confident pixels contribute 0.
ScalarSignal divergence_signal(std::span<const ImageBuffer> frames, double fps, const FlowOptions& opts = {});

/// Second-order Butterworth low-pass (bilinear transform with prewarping),
/// as {b0, b1, b2, a1, a2} with a0 = 1.
std::array<double, 5> butterworth2(double cutoff_hz, double sample_hz);

/// Forward-backward filtering with odd extension and steady-state initial
/// conditions; zero phase, squared magnitude response.
std::vector<double> filtfilt(const std::array<double, 5>& coeffs, std::span<const double> x);

/// v_k = ||X_k - X_{k-1}|| / T followed by zero-phase Butterworth smoothing.
/// Output has one sample fewer than the input. Throws NonUniformSampling.
ScalarSignal robot_speed(std::span<const double> timestamps, std::span<const Eigen::Vector3d> positions,
                         double cutoff_hz = 300.0);

/// Box-averages a signal onto a lower rate; output sample k averages the input
/// samples whose times fall in [(k - 1/2) T_out, (k + 1/2) T_out).
ScalarSignal resample_average(const ScalarSignal& s, double target_hz);

struct SyncOptions {
  /// Largest |lag| scanned in camera samples; negative scans every lag that
  /// keeps at least `min_overlap_fraction` of the shorter signal overlapping.
  int max_lag = -1;
  double min_overlap_fraction = 0.25;
  double reliable_score = 0.3;
};

struct SyncResult {
  /// robot[i + lag] pairs with camera[i], in camera samples.
  int lag = 0;
  /// Same lag expressed in samples of the robot signal.
  long robot_lag = 0;
  double score = 0.0;
  bool reliable = false;
};

/// Resamples the robot signal to the camera rate, then maximizes the Pearson
/// correlation over the overlap for every integer lag. Throws SignalTooShort.
SyncResult sync_offset(const ScalarSignal& camera, const ScalarSignal& robot, const SyncOptions& opts = {});

struct SyncRow {
  std::string sequence;
  long start_frame = 0;
  long robot_sample = 0;
};

/// Two-column table "sequence  start_frame -> robot_sample".
std::string format_sync_table(std::span<const SyncRow> rows);
void write_sync_table(const std::filesystem::path& path, std::span<const SyncRow> rows);

}  // namespace scopekit
