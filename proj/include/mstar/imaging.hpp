#pragma once

#include <string>
#include <vector>

#include "mstar/dictionary.hpp"

namespace mstar {

struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // row-major, [0, 255] on I/O boundaries

  GrayImage() = default;
  GrayImage(int h, int w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<size_t>(h) * w, fill) {}
  double& at(int r, int c) { return pixels[static_cast<size_t>(r) * width + c]; }
  double at(int r, int c) const { return pixels[static_cast<size_t>(r) * width + c]; }
};

struct PatchGeometry {
  int patch_h = 8, patch_w = 8;
  int stride = 8;
  int image_h = 0, image_w = 0;
  int rows_count = 0, cols_count = 0;  // corner grid dimensions
};

// Patches as columns, vectorized column-major within a patch (pixel (r,c) of
// a patch lands at index c*patch_h + r). Corners enumerate row-major.
// Stride 1 follows the reconstruction convention: corners in [0, H-ph) x
// [0, W-pw), i.e. (H-ph)(W-pw) patches, leaving a one-pixel bottom/right rim
// uncovered. Any other stride uses the standard grid 0, s, ..., floor((H-ph)/s)*s.
struct PatchSet {
  Mat patches;  // (ph*pw) x m
  PatchGeometry geom;
};

PatchSet extract_patches(const GrayImage& img, int patch_h = 8, int patch_w = 8, int stride = 8);

struct ReassembledImage {
  GrayImage image;             // per-pixel mean of covering patches; 0 where uncovered
  std::vector<int> coverage;   // covering-patch count per pixel
};
ReassembledImage reassemble(const PatchSet& ps);

// D X with X = encode_all(D, patches, k): each column approximated by k atoms.
Mat compress_eval(const Dictionary& D, const Mat& patches, int k, int threads = 0);

// 10 log10(255^2 / MSE); +infinity for identical images.
double psnr(const GrayImage& a, const GrayImage& b);

// Mean local SSIM: 8x8 uniform window, stride 1, C1 = (0.01*255)^2,
// C2 = (0.03*255)^2.
double ssim(const GrayImage& a, const GrayImage& b);

// Portable graymap, P5 (binary) and P2 (ASCII), maxval 255 only. Parse errors
// carry the byte offset. Values are clamped and rounded on save.
GrayImage load_pgm(const std::string& path);
void save_pgm(const GrayImage& img, const std::string& path, bool binary = true);

// Masked reconstruction: encodes every stride-1 patch of the image with the
// masked OMP at sparsity k, averages overlapping estimates, fills the
// uncovered rim from the nearest covered pixel, then overwrites observed
// pixels (mask nonzero) with the original values exactly.
GrayImage reconstruct_inpaint(const Dictionary& D, const GrayImage& image,
                              const GrayImage& mask, int k, int threads = 0);

}  // namespace mstar
