#include "melmix/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "melmix/tensor_file.hpp"

namespace melmix {

ProbeResult identity_probe(const ModelParams& params, int block_index) {
  if (params.config.ablate_token_mixer) {
    throw CapabilityError("identity_probe: ablated models have no token mixers");
  }
  if (block_index < 0 ||
      block_index >= static_cast<int>(params.blocks.size())) {
    throw RangeError("identity_probe: block index out of range");
  }
  const BlockParams& blk = params.blocks[static_cast<std::size_t>(block_index)];
  const std::size_t L = static_cast<std::size_t>(params.config.seq_len);

  Matrix identity(L, L);
  for (std::size_t i = 0; i < L; ++i) identity(i, i) = 1.0f;

  Matrix a;
  affine_into(identity, blk.token_w1.value, blk.token_b1.value, a);
  Matrix g = gelu(a);
  ProbeResult res;
  res.block_index = block_index;
  affine_into(g, blk.token_w2.value, blk.token_b2.value, res.response);
  res.diagonal_constancy = diagonal_constancy(res.response);
  res.bandwidth = bandwidth_estimate(res.response);
  return res;
}

double diagonal_constancy(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("diagonal_constancy: matrix must be square");
  }
  const std::int64_t L = static_cast<std::int64_t>(m.rows());
  if (L == 0) return 1.0;

  double total_sum = 0.0, total_sq = 0.0;
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    total_sum += m.data()[i];
    total_sq += double(m.data()[i]) * m.data()[i];
  }
  const double mean = total_sum / n;
  const double overall_var = total_sq / n - mean * mean;
  if (overall_var <= 0.0) return 1.0;

  double var_sum = 0.0;
  std::int64_t diag_count = 0;
  for (std::int64_t off = -(L - 1); off <= L - 1; ++off) {
    double s = 0.0, sq = 0.0;
    const std::int64_t len = L - std::llabs(off);
    for (std::int64_t i = std::max<std::int64_t>(0, -off);
         i < std::min(L, L - off); ++i) {
      const double v = m(static_cast<std::size_t>(i),
                         static_cast<std::size_t>(i + off));
      s += v;
      sq += v * v;
    }
    const double dmean = s / len;
    var_sum += std::max(0.0, sq / len - dmean * dmean);
    ++diag_count;
  }
  return 1.0 - (var_sum / diag_count) / overall_var;
}

int bandwidth_estimate(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw DimensionError("bandwidth_estimate: matrix must be square");
  }
  const std::int64_t L = static_cast<std::int64_t>(m.rows());
  if (L == 0) return 0;
  std::vector<double> mass(static_cast<std::size_t>(L), 0.0);  // by |offset|
  double total = 0.0;
  for (std::int64_t i = 0; i < L; ++i) {
    for (std::int64_t j = 0; j < L; ++j) {
      const double v = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      mass[static_cast<std::size_t>(std::llabs(i - j))] += v * v;
      total += v * v;
    }
  }
  if (total <= 0.0) return 0;
  double outside = total;
  for (std::int64_t b = 0; b < L; ++b) {
    outside -= mass[static_cast<std::size_t>(b)];
    if (outside < 0.1 * total) return static_cast<int>(b);
  }
  return static_cast<int>(L - 1);
}

std::vector<double> loss_profile(const ModelParams& params,
                                 const std::vector<SegmentExample>& holdout,
                                 ThreadPool* pool) {
  if (holdout.empty()) throw DegenerateInputError("loss_profile: empty holdout");
  const std::size_t L = static_cast<std::size_t>(params.config.seq_len);
  const std::size_t bins = static_cast<std::size_t>(params.config.d_mel);

  std::vector<double> sums(L, 0.0);
  std::vector<std::size_t> counts(L, 0);

  const std::size_t kMaxSegs = 64;
  for (std::size_t begin = 0; begin < holdout.size(); begin += kMaxSegs) {
    const std::size_t count = std::min(kMaxSegs, holdout.size() - begin);
    BatchInput input;
    input.segments = count;
    input.seq_len = L;
    for (std::size_t s = 0; s < count; ++s) {
      const SegmentExample& ex = holdout[begin + s];
      input.pitch_ids.insert(input.pitch_ids.end(), ex.pitch_ids.begin(),
                             ex.pitch_ids.end());
      input.phoneme_ids.insert(input.phoneme_ids.end(), ex.phoneme_ids.begin(),
                               ex.phoneme_ids.end());
    }
    const Matrix pred = forward_batch_eval(params, input, pool);
    for (std::size_t s = 0; s < count; ++s) {
      const SegmentExample& ex = holdout[begin + s];
      for (std::size_t r = 0; r < L; ++r) {
        if (!ex.mask[r]) continue;
        const float* pr = pred.data() + (s * L + r) * bins;
        const float* tr = ex.target.data() + r * bins;
        double d = 0.0;
        for (std::size_t c = 0; c < bins; ++c) {
          d += std::fabs(double(pr[c]) - double(tr[c]));
        }
        sums[r] += d / bins;
        counts[r] += 1;
      }
    }
  }
  std::vector<double> profile(L, 0.0);
  for (std::size_t r = 0; r < L; ++r) {
    if (counts[r]) profile[r] = sums[r] / counts[r];
  }
  return profile;
}

void export_heatmap(const Matrix& m, const std::string& pgm_path) {
  float lo = m.empty() ? 0.0f : m.data()[0];
  float hi = lo;
  for (std::size_t i = 0; i < m.size(); ++i) {
    lo = std::min(lo, m.data()[i]);
    hi = std::max(hi, m.data()[i]);
  }
  std::ofstream out(pgm_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + pgm_path);
  out << "P5\n" << m.cols() << " " << m.rows() << "\n255\n";
  const float range = hi - lo;
  for (std::size_t i = 0; i < m.size(); ++i) {
    int v = 128;  // zero range maps to mid-gray
    if (range > 0.0f) {
      v = static_cast<int>(std::lround((m.data()[i] - lo) / range * 255.0f));
    }
    out.put(static_cast<char>(std::clamp(v, 0, 255)));
  }
  if (!out) throw IoError("write failed: " + pgm_path);

  std::string csv_path = pgm_path;
  const auto dot = csv_path.rfind('.');
  if (dot != std::string::npos) csv_path.resize(dot);
  write_matrix_csv(m, csv_path + ".csv");
}

void write_matrix_csv(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  char buf[48];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.9g", m(r, c));
      out << buf;
      out.put(c + 1 == m.cols() ? '\n' : ',');
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<std::vector<float>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<float> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stof(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("csv: ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

}  // namespace melmix
