#include "gazeaug/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "gazeaug/augment.hpp"
#include "gazeaug/io.hpp"
#include "json.hpp"

namespace gazeaug {

using ojson = nlohmann::ordered_json;

void ProtocolConfig::validate() const {
  if (targets_per_source < 1 || sources_per_subject < 1)
    throw Error(ErrorCode::InvalidArgument, "protocol counts must be >= 1");
  if (!(radius_deg > 0 && radius_deg <= 90))
    throw Error(ErrorCode::InvalidArgument, "radius must lie in (0, 90] degrees");
  if (!(alpha >= 0 && alpha <= 1)) throw Error(ErrorCode::InvalidArgument, "alpha outside [0, 1]");
}

ImageLoader pngLoader(std::string base_dir) {
  return [base = std::move(base_dir)](const ManifestEntry& e) {
    return LabeledImage{readPng(resolvePath(base, e.image)), Labels{e.head, e.gaze}};
  };
}

namespace {

double angleFromFrontal(const Direction& d) { return rad2deg(angularError(d, Direction{})); }

struct Slot {
  std::vector<EvalRecord> records;
  std::vector<EvalFailure> failures;
};

void merge(EvalRun& run, std::vector<Slot>& slots) {
  for (auto& s : slots) {
    std::move(s.records.begin(), s.records.end(), std::back_inserter(run.records));
    std::move(s.failures.begin(), s.failures.end(), std::back_inserter(run.failures));
  }
}

}  // namespace

EvalRun redirectToAngle(const std::vector<ManifestEntry>& manifest, const Redirector& redirector,
                        const Estimator& estimator, const ImageLoader& loader,
                        const ProtocolConfig& cfg, int jobs) {
  cfg.validate();
  Rng select_rng = StreamKey(cfg.seed).add("eval-sources").rng();
  const auto selected = selectSourceRows(manifest, cfg.sources_per_subject, 1, select_rng);
  std::vector<std::size_t> sources;
  for (const auto& [subject, rows] : selected) sources.insert(sources.end(), rows.begin(), rows.end());

  const double radius = deg2rad(cfg.radius_deg);
  std::vector<Slot> slots(sources.size());
  parallelFor(sources.size(), jobs, [&](std::size_t s) {
    const std::size_t row = sources[s];
    const ManifestEntry& entry = manifest[row];
    Slot& slot = slots[s];
    LabeledImage source_image;
    try {
      source_image = loader(entry);
    } catch (const std::exception& e) {
      for (int k = 0; k < cfg.targets_per_source; ++k) slot.failures.push_back({row, k, e.what()});
      return;
    }
    const Labels src{entry.head, entry.gaze};
    for (int k = 0; k < cfg.targets_per_source; ++k) {
      Rng rng = StreamKey(cfg.seed)
                    .add("eval-target")
                    .add(entry.subject)
                    .add(entry.image)
                    .add(static_cast<std::uint64_t>(k))
                    .rng();
      const Direction t = sampleDiskDirection(cfg.center, radius, rng);
      RedirectRequest req{entry, source_image, cfg.pattern, std::nullopt, std::nullopt, rng()};
      Labels expected = src;
      switch (cfg.pattern) {
        case RedirectPattern::Both:
          req.target_head = t;
          expected.head = t;
          expected.gaze = src.head == t
                              ? src.gaze
                              : vectorToDirection<double>(rotationBetween(src.head, t) *
                                                          directionToVector(src.gaze));
          break;
        case RedirectPattern::HeadOnly:
          req.target_head = t;
          expected.head = t;
          break;
        case RedirectPattern::GazeOnly:
          req.target_gaze = t;
          expected.gaze = t;
          break;
      }
      try {
        const LabeledImage out = redirector.redirect(req);
        const Labels est = estimator.estimate(out);
        EvalRecord rec;
        rec.subject = entry.subject;
        rec.source_image = entry.image;
        rec.target_index = k;
        rec.source = src;
        rec.target = expected;
        rec.estimated = est;
        rec.target_angle_deg = angleFromFrontal(t);
        rec.head_error_deg = redirectionError(expected.head, est.head);
        rec.gaze_error_deg = redirectionError(expected.gaze, est.gaze);
        slot.records.push_back(std::move(rec));
      } catch (const std::exception& e) {
        slot.failures.push_back({row, k, e.what()});
      }
    }
  });
  EvalRun run;
  merge(run, slots);
  return run;
}

EvalRun redirectToImage(const std::vector<std::pair<ManifestEntry, ManifestEntry>>& pairs,
                        const Redirector& redirector, const Estimator& estimator,
                        const ImageLoader& loader, const std::optional<PairFeatures>& features,
                        const ProtocolConfig& cfg, int jobs, const GeneratedSink& sink) {
  cfg.validate();
  if (pairs.empty()) throw Error(ErrorCode::InvalidArgument, "no redirect-to-image pairs");
  if (features) {
    const auto n = static_cast<Eigen::Index>(pairs.size());
    if (features->generated.count() != n || features->target.count() != n)
      throw Error(ErrorCode::DimensionMismatch,
                  "feature rows must align with the " + std::to_string(pairs.size()) + " pairs");
  }

  std::vector<Slot> slots(pairs.size());
  parallelFor(pairs.size(), jobs, [&](std::size_t i) {
    const auto& [source, target] = pairs[i];
    Slot& slot = slots[i];
    try {
      const LabeledImage source_image = loader(source);
      const LabeledImage target_image = loader(target);
      RedirectRequest req{source, source_image, RedirectPattern::Both, target.head, target.gaze,
                          StreamKey(cfg.seed).add("eval-image").add(static_cast<std::uint64_t>(i)).value()};
      const LabeledImage out = redirector.redirect(req);
      if (sink) sink(i, out);
      const Labels est = estimator.estimate(out);
      EvalRecord rec;
      rec.subject = source.subject;
      rec.source_image = source.image;
      rec.target_index = static_cast<int>(i);
      rec.source = {source.head, source.gaze};
      rec.target = {target.head, target.gaze};
      rec.estimated = est;
      rec.target_angle_deg = angleFromFrontal(target.head);
      rec.head_error_deg = redirectionError(target.head, est.head);
      rec.gaze_error_deg = redirectionError(target.gaze, est.gaze);
      rec.metrics["l1"] = l1(out.image, target_image.image);
      rec.metrics["ms_ssim"] = msSsim(out.image, target_image.image);
      rec.metrics["mixed_rec"] =
          cfg.alpha * (1 - rec.metrics["ms_ssim"]) + (1 - cfg.alpha) * rec.metrics["l1"];
      if (features) {
        const auto r = static_cast<Eigen::Index>(i);
        rec.metrics["identity_similarity"] = identitySimilarity(
            features->generated.rows.row(r).transpose(), features->target.rows.row(r).transpose());
      }
      slot.records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      slot.failures.push_back({i, 0, e.what()});
    }
  });
  EvalRun run;
  merge(run, slots);
  if (features)
    run.fid = fid(features->generated, features->target);
  else
    run.warnings.push_back("no feature files: identity similarity and FID omitted");
  return run;
}

namespace {

std::string csvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

ojson summaryToJson(const ReportSummary& s) {
  ojson j;
  j["records"] = s.records;
  j["failures"] = s.failures;
  j["mean_head_error_deg"] = s.mean_head_error_deg;
  j["mean_gaze_error_deg"] = s.mean_gaze_error_deg;
  j["metrics"] = ojson::object();
  for (const auto& [k, v] : s.metric_means) j["metrics"][k] = v;
  if (s.fid) j["fid"] = *s.fid;
  j["bin_width_deg"] = s.bin_width_deg;
  j["bins"] = ojson::array();
  for (const auto& b : s.bins)
    j["bins"].push_back({{"bin_start_deg", b.start_deg},
                         {"count", b.count},
                         {"mean_head_error_deg", b.mean_head_error_deg},
                         {"mean_gaze_error_deg", b.mean_gaze_error_deg}});
  return j;
}

}  // namespace

ReportBundle report(const EvalRun& run, double bin_width_deg) {
  if (run.records.empty()) throw Error(ErrorCode::EmptyRun, "no evaluation records");
  if (!(bin_width_deg > 0)) throw Error(ErrorCode::InvalidArgument, "bin width must be positive");

  std::vector<const EvalRecord*> recs;
  for (const auto& r : run.records) recs.push_back(&r);
  std::sort(recs.begin(), recs.end(), [](const EvalRecord* a, const EvalRecord* b) {
    return std::tie(a->subject, a->source_image, a->target_index) <
           std::tie(b->subject, b->source_image, b->target_index);
  });

  ReportBundle out;
  ReportSummary& s = out.summary;
  s.records = recs.size();
  s.failures = run.failures.size();
  s.fid = run.fid;
  s.bin_width_deg = bin_width_deg;

  std::vector<std::string> metric_names;
  for (const auto& [name, v] : recs.front()->metrics) metric_names.push_back(name);
  std::map<std::string, double> metric_sums;
  std::map<long, AngleBin> bins;
  double head_sum = 0, gaze_sum = 0;
  for (const EvalRecord* r : recs) {
    if (r->metrics.size() != metric_names.size())
      throw Error(ErrorCode::InvalidArgument, "records carry inconsistent metric sets");
    head_sum += r->head_error_deg;
    gaze_sum += r->gaze_error_deg;
    for (const auto& [name, v] : r->metrics) metric_sums[name] += v;
    const long b = static_cast<long>(std::floor(r->target_angle_deg / bin_width_deg));
    AngleBin& bin = bins[b];
    bin.start_deg = b * bin_width_deg;
    ++bin.count;
    bin.mean_head_error_deg += r->head_error_deg;
    bin.mean_gaze_error_deg += r->gaze_error_deg;
  }
  const double n = static_cast<double>(recs.size());
  s.mean_head_error_deg = head_sum / n;
  s.mean_gaze_error_deg = gaze_sum / n;
  for (const auto& [name, sum] : metric_sums) s.metric_means[name] = sum / n;
  for (auto& [b, bin] : bins) {
    bin.mean_head_error_deg /= static_cast<double>(bin.count);
    bin.mean_gaze_error_deg /= static_cast<double>(bin.count);
    s.bins.push_back(bin);
  }

  out.summary_json = summaryToJson(s).dump(2) + "\n";

  std::string csv =
      "subject,source_image,target_index,source_head_pitch,source_head_yaw,source_gaze_pitch,"
      "source_gaze_yaw,target_head_pitch,target_head_yaw,target_gaze_pitch,target_gaze_yaw,"
      "est_head_pitch,est_head_yaw,est_gaze_pitch,est_gaze_yaw,target_angle_deg,head_error_deg,"
      "gaze_error_deg";
  for (const auto& name : metric_names) csv += "," + name;
  csv += "\n";
  for (const EvalRecord* r : recs) {
    csv += csvField(r->subject) + "," + csvField(r->source_image) + "," +
           std::to_string(r->target_index);
    for (const Labels* l : {&r->source, &r->target, &r->estimated})
      for (double v : {l->head.pitch, l->head.yaw, l->gaze.pitch, l->gaze.yaw})
        csv += "," + formatDouble(v);
    for (double v : {r->target_angle_deg, r->head_error_deg, r->gaze_error_deg})
      csv += "," + formatDouble(v);
    for (const auto& name : metric_names) csv += "," + formatDouble(r->metrics.at(name));
    csv += "\n";
  }
  out.records_csv = std::move(csv);

  std::string bcsv = "bin_start_deg,count,mean_head_err,mean_gaze_err\n";
  for (const auto& b : s.bins)
    bcsv += formatDouble(b.start_deg) + "," + std::to_string(b.count) + "," +
            formatDouble(b.mean_head_error_deg) + "," + formatDouble(b.mean_gaze_error_deg) + "\n";
  out.bins_csv = std::move(bcsv);
  return out;
}

void writeReport(const std::string& dir, const ReportBundle& bundle) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  writeText((fs::path(dir) / "summary.json").string(), bundle.summary_json);
  writeText((fs::path(dir) / "records.csv").string(), bundle.records_csv);
  writeText((fs::path(dir) / "bins.csv").string(), bundle.bins_csv);
}

ReportSummary parseSummaryJson(const std::string& text) {
  try {
    const auto j = ojson::parse(text);
    ReportSummary s;
    s.records = j.at("records").get<std::size_t>();
    s.failures = j.at("failures").get<std::size_t>();
    s.mean_head_error_deg = j.at("mean_head_error_deg").get<double>();
    s.mean_gaze_error_deg = j.at("mean_gaze_error_deg").get<double>();
    for (const auto& [k, v] : j.at("metrics").items()) s.metric_means[k] = v.get<double>();
    if (j.contains("fid")) s.fid = j.at("fid").get<double>();
    s.bin_width_deg = j.at("bin_width_deg").get<double>();
    for (const auto& b : j.at("bins"))
      s.bins.push_back({b.at("bin_start_deg").get<double>(), b.at("count").get<std::size_t>(),
                        b.at("mean_head_error_deg").get<double>(),
                        b.at("mean_gaze_error_deg").get<double>()});
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("summary.json: ") + e.what());
  }
}

std::string diffSummaries(const ReportSummary& baseline, const ReportSummary& treatment) {
  if (baseline.bin_width_deg != treatment.bin_width_deg)
    throw Error(ErrorCode::InvalidArgument, "reports use different bin widths");
  ojson j;
  j["baseline_records"] = baseline.records;
  j["treatment_records"] = treatment.records;
  j["head_error_delta_deg"] = treatment.mean_head_error_deg - baseline.mean_head_error_deg;
  j["gaze_error_delta_deg"] = treatment.mean_gaze_error_deg - baseline.mean_gaze_error_deg;
  j["metrics"] = ojson::object();
  for (const auto& [k, v] : treatment.metric_means) {
    const auto it = baseline.metric_means.find(k);
    if (it != baseline.metric_means.end()) j["metrics"][k] = v - it->second;
  }
  if (baseline.fid && treatment.fid) j["fid_delta"] = *treatment.fid - *baseline.fid;
  j["bin_width_deg"] = baseline.bin_width_deg;
  j["bins"] = ojson::array();
  for (const auto& tb : treatment.bins)
    for (const auto& bb : baseline.bins)
      if (bb.start_deg == tb.start_deg)
        j["bins"].push_back({{"bin_start_deg", tb.start_deg},
                             {"baseline_count", bb.count},
                             {"treatment_count", tb.count},
                             {"head_error_delta_deg", tb.mean_head_error_deg - bb.mean_head_error_deg},
                             {"gaze_error_delta_deg", tb.mean_gaze_error_deg - bb.mean_gaze_error_deg}});
  return j.dump(2) + "\n";
}

}  // namespace gazeaug
