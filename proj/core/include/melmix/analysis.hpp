#pragma once

#include <string>
#include <vector>

#include "melmix/model.hpp"
#include "melmix/trainer.hpp"

namespace melmix {

struct ProbeResult {
  int block_index = 0;
  Matrix response;             // L x L
  double diagonal_constancy = 0.0;  // in [0, 1]
  int bandwidth = 0;           // r, in frames
};

// Feeds an identity matrix through the block's token-mixer feedforward
// (no residual, no layernorm) and scores the L x L response.
ProbeResult identity_probe(const ModelParams& params, int block_index);

// 1 - mean per-diagonal variance / overall variance; 1 when the matrix is
// constant. Square matrices only.
double diagonal_constancy(const Matrix& m);

// Smallest b such that diagonals beyond offset +-b carry less than 10% of
// the total squared mass.
int bandwidth_estimate(const Matrix& m);

// Mean absolute error per segment position over unpadded frames, averaged
// over segments and mel bins. Returns seq_len values.
std::vector<double> loss_profile(const ModelParams& params,
                                 const std::vector<SegmentExample>& holdout,
                                 ThreadPool* pool = nullptr);

// 8-bit P5 PGM, min-max normalized (constant input maps to mid-gray 128),
// plus an exact-values CSV alongside (same stem, .csv extension).
void export_heatmap(const Matrix& m, const std::string& pgm_path);

// Plain CSV helpers shared by the analysis exports.
void write_matrix_csv(const Matrix& m, const std::string& path);
Matrix read_matrix_csv(const std::string& path);

}  // namespace melmix
