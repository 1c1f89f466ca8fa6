#pragma once

#include <Eigen/Dense>
#include <string>

namespace iusp {

// Parses a suite metrics.csv and writes, under out_dir:
//   auprc_by_setup.png         grouped bar chart of mean test AUPRC per setup
//                              (one bar per LSTM size) with standard-error
//                              whiskers
//   classwise_improvement.png  per-class AUPRC gain of the full distillation
//                              setup over the BCE baseline
//   improvements.csv           per-(setup, size) mean / SE / improvement table
//   summary.md                 the same table rendered as markdown
// Failed runs recorded in the CSV are skipped. Throws IoError when the CSV is
// missing and ParseError when its header does not match the suite's writer.
void write_suite_report(const std::string& metrics_csv, const std::string& out_dir);

// Grayscale heatmap of a similarity matrix; values are min-max scaled, small
// matrices are upscaled to stay legible.
void write_gram_heatmap(const Eigen::MatrixXd& gram, const std::string& path,
                        const std::string& title);

// Spectrogram + squashed frame-gram heatmap pair for one clip's student-view
// features: writes <stem>_spectrogram.png and <stem>_gram.png under out_dir.
// The gram pipeline is per-bin mean removal, channel normalization, frame
// gram, then the default sigmoid squash, which makes repetition structure
// visible as off-diagonal bands.
void write_clip_figures(const std::string& data_dir, const std::string& clip_id,
                        const std::string& out_dir, const std::string& stem);

}  // namespace iusp
