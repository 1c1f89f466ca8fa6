#include "iusp/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include "iusp/audio.hpp"
#include "iusp/error.hpp"
#include "iusp/features.hpp"
#include "iusp/kernels.hpp"
#include "iusp/manifest.hpp"
#include "iusp/model.hpp"
#include "iusp/png.hpp"
#include "iusp/synth.hpp"
#include "iusp/trainer.hpp"

namespace fs = std::filesystem;

namespace iusp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

struct MetricsRow {
  std::string setup;
  std::uint64_t seed = 0;
  int lstm_hidden = 0;
  double val = kNaN, test = kNaN;
  std::array<double, 8> classwise{};
  bool ok = false;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::vector<MetricsRow> read_metrics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open metrics file " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::string expected =
      "setup,seed,lstm_hidden,val_auprc,test_auprc,best_epoch,epochs,steps";
  for (const char* cls : kClassNames) expected += std::string(",auprc_") + cls;
  expected += ",status";
  if (line != expected)
    throw ParseError(path + ":1: unexpected header (not a suite metrics file)");

  std::vector<MetricsRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 17)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected 17 fields, got " + std::to_string(f.size()));
    MetricsRow row;
    row.setup = f[0];
    try {
      row.seed = std::stoull(f[1]);
      row.lstm_hidden = std::stoi(f[2]);
      row.val = std::stod(f[3]);
      row.test = std::stod(f[4]);
      for (int k = 0; k < 8; ++k)
        row.classwise[static_cast<std::size_t>(k)] =
            std::stod(f[static_cast<std::size_t>(8 + k)]);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad numeric field");
    }
    row.ok = f[16] == "ok";
    rows.push_back(std::move(row));
  }
  return rows;
}

struct Cell {
  int n = 0;
  double mean_val = kNaN, mean_test = kNaN, se_test = kNaN;
  std::array<double, 8> mean_classwise{};
};

Cell summarize(const std::vector<MetricsRow>& rows, const std::string& setup,
               int size) {
  std::vector<const MetricsRow*> sel;
  for (const auto& r : rows)
    if (r.ok && r.setup == setup && r.lstm_hidden == size) sel.push_back(&r);
  Cell c;
  c.n = static_cast<int>(sel.size());
  if (sel.empty()) {
    c.mean_classwise.fill(kNaN);
    return c;
  }
  double sv = 0, st = 0;
  for (const auto* r : sel) {
    sv += r->val;
    st += r->test;
  }
  c.mean_val = sv / c.n;
  c.mean_test = st / c.n;
  if (c.n >= 2) {
    double ss = 0;
    for (const auto* r : sel) ss += (r->test - c.mean_test) * (r->test - c.mean_test);
    c.se_test = std::sqrt(ss / (c.n - 1)) / std::sqrt(static_cast<double>(c.n));
  }
  for (int k = 0; k < 8; ++k) {
    double sum = 0;
    int n = 0;
    for (const auto* r : sel) {
      const double v = r->classwise[static_cast<std::size_t>(k)];
      if (std::isfinite(v)) {
        sum += v;
        ++n;
      }
    }
    c.mean_classwise[static_cast<std::size_t>(k)] = n ? sum / n : kNaN;
  }
  return c;
}

// Bar palette, one color per LSTM size.
constexpr std::array<std::array<uint8_t, 3>, 6> kPalette = {{{70, 120, 190},
                                                             {220, 130, 50},
                                                             {80, 160, 80},
                                                             {190, 80, 80},
                                                             {140, 100, 180},
                                                             {120, 120, 120}}};

std::vector<std::string> setups_present(const std::vector<MetricsRow>& rows) {
  std::vector<std::string> out;
  for (const char* name : kSetupNames) {
    for (const auto& r : rows)
      if (r.ok && r.setup == name) {
        out.push_back(name);
        break;
      }
  }
  return out;
}

std::vector<int> sizes_present(const std::vector<MetricsRow>& rows) {
  std::vector<int> out;
  for (const auto& r : rows)
    if (r.ok && std::find(out.begin(), out.end(), r.lstm_hidden) == out.end())
      out.push_back(r.lstm_hidden);
  std::sort(out.begin(), out.end());
  return out;
}

void draw_setup_chart(const std::vector<MetricsRow>& rows,
                      const std::vector<std::string>& setups,
                      const std::vector<int>& sizes, const std::string& path) {
  const int width = 960, height = 460;
  const int x0 = 80, x1 = width - 30, y0 = 50, y1 = height - 70;
  Image img(width, height);

  double ymax = 0.0;
  for (const auto& s : setups)
    for (int size : sizes) {
      const Cell c = summarize(rows, s, size);
      if (c.n && std::isfinite(c.mean_test))
        ymax = std::max(ymax, c.mean_test + (std::isfinite(c.se_test) ? c.se_test : 0));
    }
  if (ymax <= 0) ymax = 1.0;
  ymax = std::min(1.0, std::ceil(ymax * 20.0) / 20.0);  // next 0.05 step

  const auto ypix = [&](double v) {
    return y1 - static_cast<int>(std::lround((v / ymax) * (y1 - y0)));
  };

  img.text(x0, 18, "Test micro AUPRC by setup", 0, 0, 0, 2);
  img.line(x0, y0, x0, y1, 0, 0, 0);
  img.line(x0, y1, x1, y1, 0, 0, 0);
  for (int t = 0; t <= 5; ++t) {
    const double v = ymax * t / 5.0;
    const int y = ypix(v);
    img.line(x0 - 4, y, x0, y, 0, 0, 0);
    const std::string label = fmt(v, "%.2f");
    img.text(x0 - 8 - Image::text_width(label), y - 3, label, 0, 0, 0);
    if (t > 0) img.line(x0 + 1, y, x1, y, 225, 225, 225);
  }

  const int groups = static_cast<int>(setups.size());
  const double group_w = static_cast<double>(x1 - x0) / std::max(groups, 1);
  const int nbars = static_cast<int>(sizes.size());
  const int bar_w =
      std::max(6, std::min(42, static_cast<int>(group_w / (nbars + 1))));
  for (int gi = 0; gi < groups; ++gi) {
    const double gx = x0 + group_w * gi + group_w / 2.0;
    const double span = bar_w * nbars;
    for (int bi = 0; bi < nbars; ++bi) {
      const Cell c = summarize(rows, setups[static_cast<std::size_t>(gi)],
                               sizes[static_cast<std::size_t>(bi)]);
      if (!c.n || !std::isfinite(c.mean_test)) continue;
      const int bx = static_cast<int>(gx - span / 2.0 + bi * bar_w);
      const auto& col = kPalette[static_cast<std::size_t>(bi) % kPalette.size()];
      img.fill_rect(bx, ypix(c.mean_test), bar_w - 2, y1 - ypix(c.mean_test),
                    col[0], col[1], col[2]);
      if (std::isfinite(c.se_test)) {
        const int cx = bx + (bar_w - 2) / 2;
        img.line(cx, ypix(c.mean_test - c.se_test), cx,
                 ypix(c.mean_test + c.se_test), 30, 30, 30);
        img.line(cx - 4, ypix(c.mean_test - c.se_test), cx + 4,
                 ypix(c.mean_test - c.se_test), 30, 30, 30);
        img.line(cx - 4, ypix(c.mean_test + c.se_test), cx + 4,
                 ypix(c.mean_test + c.se_test), 30, 30, 30);
      }
    }
    const std::string& name = setups[static_cast<std::size_t>(gi)];
    img.text(static_cast<int>(gx) - Image::text_width(name) / 2, y1 + 10, name,
             0, 0, 0);
  }

  if (nbars > 1) {  // legend, one swatch per LSTM size
    int lx = x1 - 110, ly = y0 + 4;
    for (int bi = 0; bi < nbars; ++bi) {
      const auto& col = kPalette[static_cast<std::size_t>(bi) % kPalette.size()];
      img.fill_rect(lx, ly, 10, 10, col[0], col[1], col[2]);
      img.text(lx + 14, ly + 2,
               "H=" + std::to_string(sizes[static_cast<std::size_t>(bi)]), 0, 0,
               0);
      ly += 16;
    }
  }
  write_png(path, img);
}

void draw_classwise_chart(const std::vector<MetricsRow>& rows,
                          const std::vector<int>& sizes,
                          const std::string& path) {
  // Gain of the full setup over the baseline, averaged over sizes.
  std::array<double, 8> delta{};
  std::array<int, 8> counts{};
  for (int size : sizes) {
    const Cell base = summarize(rows, kSetupNames[0], size);
    const Cell full = summarize(rows, kSetupNames[4], size);
    if (!base.n || !full.n) continue;
    for (int k = 0; k < 8; ++k) {
      const double b = base.mean_classwise[static_cast<std::size_t>(k)];
      const double f = full.mean_classwise[static_cast<std::size_t>(k)];
      if (std::isfinite(b) && std::isfinite(f)) {
        delta[static_cast<std::size_t>(k)] += f - b;
        ++counts[static_cast<std::size_t>(k)];
      }
    }
  }
  double dmax = 0.01;
  for (int k = 0; k < 8; ++k) {
    if (counts[static_cast<std::size_t>(k)])
      delta[static_cast<std::size_t>(k)] /= counts[static_cast<std::size_t>(k)];
    else
      delta[static_cast<std::size_t>(k)] = kNaN;
    if (std::isfinite(delta[static_cast<std::size_t>(k)]))
      dmax = std::max(dmax, std::abs(delta[static_cast<std::size_t>(k)]));
  }

  const int width = 1160, height = 440;
  const int x0 = 80, x1 = width - 30, y0 = 50, y1 = height - 70;
  Image img(width, height);
  img.text(x0, 18, "Classwise AUPRC gain: full distillation vs baseline", 0, 0,
           0, 2);
  const int ymid = (y0 + y1) / 2;
  const auto ypix = [&](double v) {
    return ymid - static_cast<int>(std::lround((v / dmax) * (ymid - y0)));
  };
  img.line(x0, y0, x0, y1, 0, 0, 0);
  img.line(x0, ymid, x1, ymid, 0, 0, 0);
  for (int t = -2; t <= 2; ++t) {
    const double v = dmax * t / 2.0;
    const int y = ypix(v);
    img.line(x0 - 4, y, x0, y, 0, 0, 0);
    const std::string label = fmt(v, "%+.3f");
    img.text(x0 - 8 - Image::text_width(label), y - 3, label, 0, 0, 0);
  }

  const double group_w = static_cast<double>(x1 - x0) / 8.0;
  for (int k = 0; k < 8; ++k) {
    const double v = delta[static_cast<std::size_t>(k)];
    const double gx = x0 + group_w * k + group_w / 2.0;
    if (std::isfinite(v)) {
      const int bw = std::min(48, static_cast<int>(group_w * 0.5));
      const int bx = static_cast<int>(gx) - bw / 2;
      if (v >= 0)
        img.fill_rect(bx, ypix(v), bw, ymid - ypix(v), 80, 160, 80);
      else
        img.fill_rect(bx, ymid, bw, ypix(v) - ymid, 190, 80, 80);
      const std::string label = fmt(v, "%+.3f");
      img.text(static_cast<int>(gx) - Image::text_width(label) / 2,
               v >= 0 ? ypix(v) - 10 : ypix(v) + 4, label, 0, 0, 0);
    }
    const std::string name = kClassNames[static_cast<std::size_t>(k)];
    img.text(static_cast<int>(gx) - Image::text_width(name) / 2, y1 + 10, name,
             0, 0, 0);
  }
  write_png(path, img);
}

void heatmap_into(Image& img, const Eigen::MatrixXd& m, int ox, int oy,
                  int scale) {
  double lo = m.minCoeff(), hi = m.maxCoeff();
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      const double t = (m(r, c) - lo) / (hi - lo);
      const auto g = static_cast<uint8_t>(std::lround(255.0 * t));
      img.fill_rect(ox + c * scale, oy + r * scale, scale, scale, g, g, g);
    }
}

}  // namespace

void write_suite_report(const std::string& metrics_csv,
                        const std::string& out_dir) {
  const std::vector<MetricsRow> rows = read_metrics(metrics_csv);
  const std::vector<std::string> setups = setups_present(rows);
  const std::vector<int> sizes = sizes_present(rows);
  if (setups.empty() || sizes.empty())
    throw InvalidInput(metrics_csv + ": no successful runs to report");
  fs::create_directories(out_dir);

  draw_setup_chart(rows, setups, sizes, out_dir + "/auprc_by_setup.png");
  draw_classwise_chart(rows, sizes, out_dir + "/classwise_improvement.png");

  // Improvement table, CSV + markdown.
  std::ofstream csv(out_dir + "/improvements.csv", std::ios::binary);
  if (!csv) throw IoError("cannot write " + out_dir + "/improvements.csv");
  std::ofstream md(out_dir + "/summary.md", std::ios::binary);
  if (!md) throw IoError("cannot write " + out_dir + "/summary.md");
  csv << "setup,lstm_hidden,runs,mean_val_auprc,mean_test_auprc,se_test_auprc,"
         "improvement_abs,improvement_rel_pct\n";
  md << "# Setup suite summary\n\n";
  md << "| setup | H | runs | mean val AUPRC | mean test AUPRC | SE | abs gain "
        "| rel gain % |\n";
  md << "|---|---|---|---|---|---|---|---|\n";
  for (int size : sizes) {
    const Cell base = summarize(rows, kSetupNames[0], size);
    for (const auto& setup : setups) {
      const Cell c = summarize(rows, setup, size);
      const double imp = c.mean_test - base.mean_test;
      const double rel = 100.0 * imp / base.mean_test;
      csv << setup << ',' << size << ',' << c.n << ',' << fmt12(c.mean_val)
          << ',' << fmt12(c.mean_test) << ',' << fmt12(c.se_test) << ','
          << fmt12(imp) << ',' << fmt12(rel) << '\n';
      md << "| " << setup << " | " << size << " | " << c.n << " | "
         << fmt(c.mean_val, "%.4f") << " | " << fmt(c.mean_test, "%.4f")
         << " | " << fmt(c.se_test, "%.4f") << " | " << fmt(imp, "%+.4f")
         << " | " << fmt(rel, "%+.2f") << " |\n";
    }
  }
}

void write_gram_heatmap(const Eigen::MatrixXd& gram, const std::string& path,
                        const std::string& title) {
  if (gram.rows() == 0 || gram.cols() == 0)
    throw InvalidInput("write_gram_heatmap: empty matrix");
  const int scale = std::clamp(
      600 / static_cast<int>(std::max(gram.rows(), gram.cols())), 1, 40);
  const int margin = 10, title_h = 24;
  const int w = margin * 2 + static_cast<int>(gram.cols()) * scale;
  const int h = margin * 2 + title_h + static_cast<int>(gram.rows()) * scale;
  Image img(std::max(w, margin * 2 + Image::text_width(title, 1)), h);
  img.text(margin, margin, title, 0, 0, 0);
  heatmap_into(img, gram, margin, margin + title_h, scale);
  write_png(path, img);
}

void write_clip_figures(const std::string& data_dir, const std::string& clip_id,
                        const std::string& out_dir, const std::string& stem) {
  const std::string wav = audio_path(data_dir, clip_id);
  if (!fs::exists(wav))
    throw IoError("clip '" + clip_id + "': missing audio file " + wav);
  const FeaturePair fp = extract_pair(read_wav(wav));
  fs::create_directories(out_dir);

  // Spectrogram: mel bin 0 at the bottom, time left to right.
  const LogMelSpectrogram& m = fp.student_input;
  const int cell = 6, margin = 10, title_h = 24;
  Image spec(margin * 2 + m.frames, margin * 2 + title_h + m.mel_bins * cell);
  spec.text(margin, margin, stem + " log-mel spectrogram", 0, 0, 0);
  double lo = m.values[0], hi = m.values[0];
  for (double v : m.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  for (int b = 0; b < m.mel_bins; ++b)
    for (int t = 0; t < m.frames; ++t) {
      const double x = (m.at(b, t) - lo) / (hi - lo);
      const auto g = static_cast<uint8_t>(std::lround(255.0 * x));
      spec.fill_rect(margin + t, margin + title_h + (m.mel_bins - 1 - b) * cell,
                     1, cell, g, g, g);
    }
  write_png(out_dir + "/" + stem + "_spectrogram.png", spec);

  // Frame gram of the mean-centered spectrogram: removing each bin's mean
  // suppresses the energy floor every frame shares, so the picture is carried
  // by the repetition structure rather than a constant offset.
  FeatureMap map(1, 1, m.mel_bins, m.frames, "input");
  for (int b = 0; b < m.mel_bins; ++b) {
    double mean = 0.0;
    for (int t = 0; t < m.frames; ++t) mean += m.at(b, t);
    mean /= m.frames;
    for (int t = 0; t < m.frames; ++t) map.at(0, 0, b, t) = m.at(b, t) - mean;
  }
  const SimilarityMatrix gram =
      sigmoid_squash(frame_gram(channel_normalize(map), 0), SquashParams{});
  write_gram_heatmap(gram.values, out_dir + "/" + stem + "_gram.png",
                     stem + " frame similarity");
}

}  // namespace iusp
