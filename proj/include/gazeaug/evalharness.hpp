#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gazeaug/manifest.hpp"
#include "gazeaug/metrics.hpp"
#include "gazeaug/redirect.hpp"

namespace gazeaug {

struct ProtocolConfig {
  int targets_per_source = 10;
  double radius_deg = 60;
  int sources_per_subject = 20;
  RedirectPattern pattern = RedirectPattern::Both;
  std::uint64_t seed = 0;
  Direction center;  // disk center, radians
  double alpha = 0.84;

  void validate() const;
};

struct EvalRecord {
  std::string subject;
  std::string source_image;
  int target_index = 0;
  Labels source;
  Labels target;
  Labels estimated;
  double target_angle_deg = 0;  // angle of the sampled target from frontal
  double head_error_deg = 0;
  double gaze_error_deg = 0;
  std::map<std::string, double> metrics;
};

struct EvalFailure {
  std::size_t row;
  int target_index;
  std::string reason;
};

struct EvalRun {
  std::vector<EvalRecord> records;
  std::vector<EvalFailure> failures;
  std::optional<double> fid;
  std::vector<std::string> warnings;
};

// Loads a source/target image and attaches its manifest labels as sidecar.
using ImageLoader = std::function<LabeledImage(const ManifestEntry&)>;
ImageLoader pngLoader(std::string base_dir);

// Sources per subject are drawn without replacement (all rows when a subject
// has fewer than sources_per_subject). Each source gets targets_per_source
// disk-sampled targets. Both/HeadOnly sample head targets, GazeOnly samples
// gaze targets; the untouched factor's expected label follows the pattern.
EvalRun redirectToAngle(const std::vector<ManifestEntry>& manifest, const Redirector& redirector,
                        const Estimator& estimator, const ImageLoader& loader,
                        const ProtocolConfig& cfg, int jobs = 1);

struct PairFeatures {
  FeatureSet generated;  // row i: features of the redirected image of pair i
  FeatureSet target;     // row i: features of the target image of pair i
};

using GeneratedSink = std::function<void(std::size_t pair_index, const LabeledImage&)>;

// Redirects each source toward its target's head and gaze labels and scores
// the result against the target image.
EvalRun redirectToImage(const std::vector<std::pair<ManifestEntry, ManifestEntry>>& pairs,
                        const Redirector& redirector, const Estimator& estimator,
                        const ImageLoader& loader, const std::optional<PairFeatures>& features,
                        const ProtocolConfig& cfg, int jobs = 1,
                        const GeneratedSink& sink = nullptr);

struct AngleBin {
  double start_deg = 0;
  std::size_t count = 0;
  double mean_head_error_deg = 0;
  double mean_gaze_error_deg = 0;
};

struct ReportSummary {
  std::size_t records = 0;
  std::size_t failures = 0;
  double mean_head_error_deg = 0;
  double mean_gaze_error_deg = 0;
  std::map<std::string, double> metric_means;
  std::optional<double> fid;
  double bin_width_deg = 10;
  std::vector<AngleBin> bins;  // nonempty bins only, ascending
};

struct ReportBundle {
  ReportSummary summary;
  std::string summary_json;
  std::string records_csv;
  std::string bins_csv;
};

// Records are sorted by (subject, source image, target index) first, so the
// bundle does not depend on worker scheduling.
ReportBundle report(const EvalRun& run, double bin_width_deg = 10);
void writeReport(const std::string& dir, const ReportBundle& bundle);

ReportSummary parseSummaryJson(const std::string& text);

// treatment - baseline; negative values mean the treatment reduced the error.
std::string diffSummaries(const ReportSummary& baseline, const ReportSummary& treatment);

}  // namespace gazeaug
