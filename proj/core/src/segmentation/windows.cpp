// Copyright 2026 The deepstf Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepstf/segmentation/windows.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <mutex>

#include <nlohmann/json.hpp>

#include "deepstf/error.hpp"

namespace deepstf {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// FFTW plans are created under a global lock (the planner is not
// thread-safe) and cached per thread. FFTW_ESTIMATE keeps the chosen
// algorithm, and therefore the rounding, identical across runs.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  double* input() { return in_; }
  const fftw_complex* output() const { return out_; }
  void execute() { fftw_execute(plan_); }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

RealFft& thread_fft(std::size_t n) {
  thread_local std::unique_ptr<RealFft> fft;
  if (!fft || fft->size() != n) fft = std::make_unique<RealFft>(n);
  return *fft;
}

const char* rule_name(LabelRule r) { return r == LabelRule::Point ? "point" : "majority"; }

LocomotionMode label_for(const StateTrack& track, std::int64_t end, const WindowSpec& spec) {
  const std::int64_t at = end + spec.p_label;
  if (spec.label_rule == LabelRule::Point || spec.p_label == 0) return track.mode_at(at);
  std::array<std::int64_t, kModeCount> votes{};
  for (std::int64_t i = end + 1; i <= at; ++i) ++votes[mode_index(track.mode_at(i))];
  // Ties go to the mode seen last, i.e. the one in effect at the label point.
  std::size_t best = mode_index(track.mode_at(at));
  for (std::size_t m = 0; m < kModeCount; ++m) {
    if (votes[m] > votes[best]) best = m;
  }
  return static_cast<LocomotionMode>(best);
}

}  // namespace

void WindowSpec::validate() const {
  if (window_len <= 0) throw ConfigError("window_len must be > 0");
  if (stride <= 0) throw ConfigError("stride must be > 0");
  if (p_label < 0) throw ConfigError("p_label must be >= 0");
}

std::string WindowSpec::hash() const {
  nlohmann::json j = *this;
  return hex64(fnv1a64(j.dump()));
}

void to_json(nlohmann::json& j, const WindowSpec& s) {
  j = nlohmann::json{{"window_len", s.window_len},
                     {"stride", s.stride},
                     {"p_label", s.p_label},
                     {"label_rule", rule_name(s.label_rule)},
                     {"log_magnitude", s.log_magnitude}};
}

void from_json(const nlohmann::json& j, WindowSpec& s) {
  const WindowSpec d;
  s.window_len = j.value("window_len", d.window_len);
  s.stride = j.value("stride", d.stride);
  s.p_label = j.value("p_label", d.p_label);
  const std::string rule = j.value("label_rule", std::string(rule_name(d.label_rule)));
  if (rule == "point") {
    s.label_rule = LabelRule::Point;
  } else if (rule == "majority") {
    s.label_rule = LabelRule::Majority;
  } else {
    throw ConfigError("unknown label_rule '" + rule + "'");
  }
  s.log_magnitude = j.value("log_magnitude", d.log_magnitude);
}

std::int64_t ms_to_samples(double ms) { return static_cast<std::int64_t>(std::llround(ms * kEmgRate / 1000.0)); }

StateTrack::StateTrack(std::vector<LocomotionMode> modes, std::vector<std::int32_t> owner,
                       std::vector<TransitionEvent> transitions)
    : modes_(std::move(modes)), owner_(std::move(owner)), transitions_(std::move(transitions)) {
  if (modes_.size() != owner_.size()) throw ShapeError("StateTrack: mode and owner lengths differ");
}

StateTag StateTrack::tag_at(std::int64_t i) const {
  const std::int32_t o = owner_at(i);
  if (o < 0) return {};
  const auto& t = transitions_[static_cast<std::size_t>(o)];
  return {true, t.kind, t.transition_point};
}

StateTrack build_state_track(const ModeAnnotation& annotation, const std::vector<TransitionEvent>& transitions) {
  const std::int64_t T = annotation.length();
  validate_annotation(annotation, T);
  std::vector<LocomotionMode> modes(static_cast<std::size_t>(T));
  for (const auto& seg : annotation.segments) {
    std::fill(modes.begin() + seg.start, modes.begin() + seg.end, seg.mode);
  }
  std::vector<std::int32_t> owner(static_cast<std::size_t>(T), -1);
  for (std::size_t k = 1; k < transitions.size(); ++k) {
    if (transitions[k].transition_point < transitions[k - 1].transition_point) {
      throw DataError("transitions not sorted by transition point");
    }
  }
  // Painting in time order lets the later transition overwrite any overlap.
  for (std::size_t k = 0; k < transitions.size(); ++k) {
    const std::int64_t tc = transitions[k].transition_point;
    if (tc < 0 || tc > T) throw DataError("transition point outside trial");
    const std::int64_t lo = std::max<std::int64_t>(0, tc - kTransitionalSpan);
    std::fill(owner.begin() + lo, owner.begin() + tc, static_cast<std::int32_t>(k));
  }
  return StateTrack(std::move(modes), std::move(owner), transitions);
}

std::int64_t window_count(std::int64_t length, const WindowSpec& spec) {
  spec.validate();
  if (length < spec.window_len + spec.p_label) {
    throw DataError("trial too short: " + std::to_string(length) + " samples < window + p_label (" +
                    std::to_string(spec.window_len + spec.p_label) + ")");
  }
  return (length - spec.window_len - spec.p_label) / spec.stride + 1;
}

std::vector<WindowRef> segment_trial(const StateTrack& track, const WindowSpec& spec, std::size_t trial_index) {
  const std::int64_t n = window_count(track.length(), spec);
  std::vector<WindowRef> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) {
    const std::int64_t end = spec.window_len - 1 + k * spec.stride;
    out.push_back({trial_index, end, label_for(track, end, spec), track.tag_at(end + spec.p_label)});
  }
  return out;
}

void fill_time_window(const SampleMatrix& signal, std::int64_t window_end, std::int64_t window_len,
                      std::span<float> out) {
  const std::size_t C = signal.cols();
  const std::int64_t start = window_end - window_len + 1;
  if (start < 0 || window_end >= static_cast<std::int64_t>(signal.rows())) {
    throw ShapeError("window [" + std::to_string(start) + ", " + std::to_string(window_end) + "] outside signal");
  }
  if (out.size() != static_cast<std::size_t>(window_len) * C) throw ShapeError("window buffer size mismatch");
  const auto src = signal.values().subspan(static_cast<std::size_t>(start) * C, out.size());
  std::copy(src.begin(), src.end(), out.begin());
}

void fft_magnitude(std::span<const float> data, std::size_t window_len, std::size_t channels, std::span<float> out,
                   bool log_magnitude) {
  if (data.size() != window_len * channels || out.size() != data.size()) {
    throw ShapeError("fft_magnitude: buffer size mismatch");
  }
  RealFft& fft = thread_fft(window_len);
  const std::size_t half = window_len / 2;
  for (std::size_t c = 0; c < channels; ++c) {
    double* in = fft.input();
    for (std::size_t t = 0; t < window_len; ++t) in[t] = data[t * channels + c];
    fft.execute();
    const fftw_complex* X = fft.output();
    for (std::size_t k = 0; k <= half; ++k) {
      double mag = std::hypot(X[k][0], X[k][1]);
      if (log_magnitude) mag = std::log1p(mag);
      const auto v = static_cast<float>(mag);
      out[k * channels + c] = v;
      if (k > 0 && k < window_len - k) out[(window_len - k) * channels + c] = v;
    }
  }
}

std::vector<float> fft_magnitude(std::span<const float> data, std::size_t window_len, std::size_t channels,
                                 bool log_magnitude) {
  std::vector<float> out(data.size());
  fft_magnitude(data, window_len, channels, out, log_magnitude);
  return out;
}

LabeledWindow materialize_window(const SampleMatrix& normalized, const WindowRef& ref, const WindowSpec& spec,
                                 const std::string& trial_id) {
  LabeledWindow w;
  const std::size_t n = static_cast<std::size_t>(spec.window_len) * normalized.cols();
  w.time_data.resize(n);
  fill_time_window(normalized, ref.window_end, spec.window_len, w.time_data);
  w.freq_data = fft_magnitude(w.time_data, static_cast<std::size_t>(spec.window_len), normalized.cols(),
                              spec.log_magnitude);
  w.label = ref.label;
  w.tag = ref.tag;
  w.window_end = ref.window_end;
  w.trial_id = trial_id;
  return w;
}

Container windows_to_container(const std::vector<LabeledWindow>& windows, const std::string& trial_id,
                               const WindowSpec& spec) {
  Container c("windows");
  c.set_metadata(nlohmann::json{{"trial_id", trial_id}, {"spec_hash", spec.hash()}, {"spec", spec}}.dump());
  const std::uint64_t n = windows.size();
  const std::uint64_t per = n ? windows.front().time_data.size() : 0;
  std::vector<float> time, freq;
  std::vector<std::int64_t> meta;
  time.reserve(n * per);
  freq.reserve(n * per);
  meta.reserve(n * 5);
  for (const auto& w : windows) {
    if (w.time_data.size() != per || w.freq_data.size() != per) throw ShapeError("windows differ in size");
    time.insert(time.end(), w.time_data.begin(), w.time_data.end());
    freq.insert(freq.end(), w.freq_data.begin(), w.freq_data.end());
    meta.push_back(w.window_end);
    meta.push_back(static_cast<std::int64_t>(mode_index(w.label)));
    meta.push_back(w.tag.transitional ? 1 : 0);
    meta.push_back(w.tag.kind ? static_cast<std::int64_t>(*w.tag.kind) : -1);
    meta.push_back(w.tag.t_c);
  }
  c.add_f32("time_data", {n, per}, std::move(time));
  c.add_f32("freq_data", {n, per}, std::move(freq));
  c.add_i64("meta", {n, 5}, std::move(meta));
  return c;
}

std::vector<LabeledWindow> windows_from_container(const Container& container, const std::string& trial_id,
                                                  const WindowSpec& spec) {
  if (container.kind() != "windows") throw DataError("not a windows cache: kind '" + container.kind() + "'");
  const auto meta_json = nlohmann::json::parse(container.metadata());
  if (meta_json.value("trial_id", std::string()) != trial_id || meta_json.value("spec_hash", std::string()) != spec.hash()) {
    throw DataError("windows cache key mismatch");
  }
  const auto& time = container.f32("time_data");
  const auto& freq = container.f32("freq_data");
  const auto& meta = container.i64("meta");
  if (time.shape.size() != 2 || freq.shape != time.shape || meta.shape.size() != 2 || meta.shape[0] != time.shape[0] ||
      meta.shape[1] != 5) {
    throw DataError("windows cache: inconsistent shapes");
  }
  const std::size_t n = time.shape[0], per = time.shape[1];
  std::vector<LabeledWindow> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& w = out[i];
    w.time_data.assign(time.f32.begin() + static_cast<std::ptrdiff_t>(i * per),
                       time.f32.begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
    w.freq_data.assign(freq.f32.begin() + static_cast<std::ptrdiff_t>(i * per),
                       freq.f32.begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
    const std::int64_t* m = meta.i64.data() + i * 5;
    w.window_end = m[0];
    w.label = mode_from_index(m[1]);
    w.tag.transitional = m[2] != 0;
    if (m[3] >= 0) w.tag.kind = transition_from_index(m[3]);
    w.tag.t_c = m[4];
    w.trial_id = trial_id;
  }
  return out;
}

}  // namespace deepstf
