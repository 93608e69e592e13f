#include "mstar/imaging.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mstar/parallel.hpp"
#include "mstar/sparse_coding.hpp"

namespace mstar {

PatchSet extract_patches(const GrayImage& img, int patch_h, int patch_w, int stride) {
  if (patch_h < 1 || patch_w < 1 || stride < 1)
    throw std::invalid_argument("extract_patches: patch and stride must be positive");
  if (patch_h > img.height || patch_w > img.width)
    throw std::invalid_argument("extract_patches: patch larger than image");

  PatchSet ps;
  ps.geom.patch_h = patch_h;
  ps.geom.patch_w = patch_w;
  ps.geom.stride = stride;
  ps.geom.image_h = img.height;
  ps.geom.image_w = img.width;
  if (stride == 1) {
    // reconstruction convention: corners in [0, H-ph) x [0, W-pw)
    ps.geom.rows_count = img.height - patch_h;
    ps.geom.cols_count = img.width - patch_w;
  } else {
    ps.geom.rows_count = (img.height - patch_h) / stride + 1;
    ps.geom.cols_count = (img.width - patch_w) / stride + 1;
  }
  const long long m = static_cast<long long>(ps.geom.rows_count) * ps.geom.cols_count;
  ps.patches = Mat(patch_h * patch_w, std::max(0LL, m));

  long long col = 0;
  for (int ri = 0; ri < ps.geom.rows_count; ++ri) {
    for (int ci = 0; ci < ps.geom.cols_count; ++ci, ++col) {
      int r0 = ri * stride, c0 = ci * stride;
      for (int pc = 0; pc < patch_w; ++pc)
        for (int pr = 0; pr < patch_h; ++pr)
          ps.patches(pc * patch_h + pr, col) = img.at(r0 + pr, c0 + pc);
    }
  }
  return ps;
}

ReassembledImage reassemble(const PatchSet& ps) {
  const auto& g = ps.geom;
  ReassembledImage out;
  out.image = GrayImage(g.image_h, g.image_w, 0.0);
  out.coverage.assign(static_cast<size_t>(g.image_h) * g.image_w, 0);

  long long col = 0;
  for (int ri = 0; ri < g.rows_count; ++ri) {
    for (int ci = 0; ci < g.cols_count; ++ci, ++col) {
      int r0 = ri * g.stride, c0 = ci * g.stride;
      for (int pc = 0; pc < g.patch_w; ++pc)
        for (int pr = 0; pr < g.patch_h; ++pr) {
          out.image.at(r0 + pr, c0 + pc) += ps.patches(pc * g.patch_h + pr, col);
          out.coverage[static_cast<size_t>(r0 + pr) * g.image_w + (c0 + pc)] += 1;
        }
    }
  }
  for (size_t i = 0; i < out.image.pixels.size(); ++i)
    if (out.coverage[i] > 0) out.image.pixels[i] /= out.coverage[i];
  return out;
}

Mat compress_eval(const Dictionary& D, const Mat& patches, int k, int threads) {
  SparseCode code = encode_all(D.atoms, patches, k, threads);
  return D.atoms * code.coefficients;
}

double psnr(const GrayImage& a, const GrayImage& b) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("psnr: image dimensions differ");
  double se = 0.0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    double d = a.pixels[i] - b.pixels[i];
    se += d * d;
  }
  double mse = se / static_cast<double>(a.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace {

// summed-area table with a zero top row/left column
std::vector<double> sat(const GrayImage& img, const GrayImage* other) {
  const int h = img.height, w = img.width;
  std::vector<double> s(static_cast<size_t>(h + 1) * (w + 1), 0.0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double v = other ? img.at(r, c) * other->at(r, c) : img.at(r, c);
      s[static_cast<size_t>(r + 1) * (w + 1) + (c + 1)] =
          v + s[static_cast<size_t>(r) * (w + 1) + (c + 1)] +
          s[static_cast<size_t>(r + 1) * (w + 1) + c] - s[static_cast<size_t>(r) * (w + 1) + c];
    }
  return s;
}

double window_sum(const std::vector<double>& s, int w, int r, int c, int win) {
  return s[static_cast<size_t>(r + win) * (w + 1) + (c + win)] -
         s[static_cast<size_t>(r) * (w + 1) + (c + win)] -
         s[static_cast<size_t>(r + win) * (w + 1) + c] + s[static_cast<size_t>(r) * (w + 1) + c];
}

}  // namespace

double ssim(const GrayImage& a, const GrayImage& b) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("ssim: image dimensions differ");
  constexpr int kWin = 8;
  if (a.height < kWin || a.width < kWin)
    throw std::invalid_argument("ssim: image smaller than the 8x8 window");
  const double C1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double C2 = (0.03 * 255.0) * (0.03 * 255.0);
  const double nw = kWin * kWin;

  auto sa = sat(a, nullptr);
  auto sb = sat(b, nullptr);
  auto saa = sat(a, &a);
  auto sbb = sat(b, &b);
  auto sab = sat(a, &b);

  const int w = a.width;
  double total = 0.0;
  long long count = 0;
  for (int r = 0; r + kWin <= a.height; ++r) {
    for (int c = 0; c + kWin <= a.width; ++c) {
      double mu_a = window_sum(sa, w, r, c, kWin) / nw;
      double mu_b = window_sum(sb, w, r, c, kWin) / nw;
      double var_a = window_sum(saa, w, r, c, kWin) / nw - mu_a * mu_a;
      double var_b = window_sum(sbb, w, r, c, kWin) / nw - mu_b * mu_b;
      double cov = window_sum(sab, w, r, c, kWin) / nw - mu_a * mu_b;
      double num = (2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2);
      double den = (mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

namespace {

[[noreturn]] void pgm_fail(const std::string& path, size_t offset, const std::string& what) {
  std::ostringstream msg;
  msg << "load_pgm: " << what << " in " << path << " at byte " << offset;
  throw std::runtime_error(msg.str());
}

// skips whitespace and '#' comments, returns the next token
std::string pgm_token(const std::string& buf, size_t& pos, const std::string& path) {
  while (pos < buf.size()) {
    if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
      ++pos;
    } else if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  if (pos >= buf.size()) pgm_fail(path, pos, "unexpected end of header");
  size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  return buf.substr(start, pos - start);
}

int pgm_int(const std::string& buf, size_t& pos, const std::string& path) {
  size_t at = pos;
  std::string tok = pgm_token(buf, pos, path);
  try {
    size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (...) {
    pgm_fail(path, at, "malformed integer '" + tok + "'");
  }
}

}  // namespace

GrayImage load_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_pgm: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  std::string buf = ss.str();

  size_t pos = 0;
  std::string magic = pgm_token(buf, pos, path);
  if (magic != "P5" && magic != "P2") pgm_fail(path, 0, "unsupported magic '" + magic + "'");
  int width = pgm_int(buf, pos, path);
  int height = pgm_int(buf, pos, path);
  size_t maxval_at = pos;
  int maxval = pgm_int(buf, pos, path);
  if (width < 1 || height < 1) pgm_fail(path, 0, "non-positive dimensions");
  if (maxval != 255) pgm_fail(path, maxval_at, "maxval must be 255");

  GrayImage img(height, width);
  if (magic == "P5") {
    if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos])))
      pgm_fail(path, pos, "missing separator before raster");
    ++pos;  // exactly one whitespace byte after maxval
    size_t need = static_cast<size_t>(width) * height;
    if (buf.size() - pos < need) pgm_fail(path, buf.size(), "truncated raster");
    for (size_t i = 0; i < need; ++i)
      img.pixels[i] = static_cast<double>(static_cast<unsigned char>(buf[pos + i]));
  } else {
    for (size_t i = 0; i < img.pixels.size(); ++i) {
      size_t at = pos;
      int v = pgm_int(buf, pos, path);
      if (v < 0 || v > 255) pgm_fail(path, at, "sample out of range");
      img.pixels[i] = static_cast<double>(v);
    }
  }
  return img;
}

void save_pgm(const GrayImage& img, const std::string& path, bool binary) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_pgm: cannot open " + path);
  f << (binary ? "P5" : "P2") << "\n" << img.width << " " << img.height << "\n255\n";
  if (binary) {
    std::string raster(img.pixels.size(), '\0');
    for (size_t i = 0; i < img.pixels.size(); ++i) {
      double v = std::nearbyint(img.pixels[i]);
      v = std::min(255.0, std::max(0.0, v));
      raster[i] = static_cast<char>(static_cast<unsigned char>(v));
    }
    f.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  } else {
    for (size_t i = 0; i < img.pixels.size(); ++i) {
      double v = std::nearbyint(img.pixels[i]);
      v = std::min(255.0, std::max(0.0, v));
      f << static_cast<int>(v) << ((i + 1) % 16 == 0 ? "\n" : " ");
    }
    f << "\n";
  }
  if (!f) throw std::runtime_error("save_pgm: write failed for " + path);
}

GrayImage reconstruct_inpaint(const Dictionary& D, const GrayImage& image, const GrayImage& mask,
                              int k, int threads) {
  if (k < 1) throw std::invalid_argument("reconstruct_inpaint: k must be >= 1");
  if (mask.height != image.height || mask.width != image.width)
    throw std::invalid_argument("reconstruct_inpaint: mask dimensions differ from image");
  const int n = D.n();
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (side * side != n)
    throw std::invalid_argument("reconstruct_inpaint: dictionary rows must be a square patch");
  if (side > image.height || side > image.width)
    throw std::invalid_argument("reconstruct_inpaint: patch larger than image");

  GrayImage mask01(mask.height, mask.width);
  for (size_t i = 0; i < mask.pixels.size(); ++i)
    mask01.pixels[i] = (mask.pixels[i] != 0.0) ? 1.0 : 0.0;

  PatchSet ps = extract_patches(image, side, side, 1);
  PatchSet ms = extract_patches(mask01, side, side, 1);

  const long long m = ps.patches.cols();
  Mat estimates(n, std::max(0LL, m));
  parallel_for(m, threads, [&](long long j) {
    Vec b = ms.patches.col(j);
    if (b.maxCoeff() <= 0.0) {
      estimates.col(j).setZero();  // nothing observed in this patch
      return;
    }
    OmpResult r = omp_masked(D.atoms, ps.patches.col(j), b, k);
    Vec est = Vec::Zero(n);
    for (size_t t = 0; t < r.support.size(); ++t)
      est += D.atoms.col(r.support[t]) * r.coeffs[static_cast<Eigen::Index>(t)];
    estimates.col(j) = est;
  });

  PatchSet est_ps;
  est_ps.patches = estimates;
  est_ps.geom = ps.geom;
  ReassembledImage rec = reassemble(est_ps);

  // rim left uncovered by the corner convention: borrow the nearest covered
  // estimate, then overwrite observed pixels with the original values exactly
  const int max_r = std::max(0, image.height - 2);
  const int max_c = std::max(0, image.width - 2);
  GrayImage out(image.height, image.width);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      if (mask01.at(r, c) != 0.0) {
        out.at(r, c) = image.at(r, c);
        continue;
      }
      int rr = r, cc = c;
      if (rec.coverage[static_cast<size_t>(r) * image.width + c] == 0) {
        rr = std::min(r, max_r);
        cc = std::min(c, max_c);
      }
      double v = rec.image.at(rr, cc);
      out.at(r, c) = std::min(255.0, std::max(0.0, v));
    }
  }
  return out;
}

}  // namespace mstar
