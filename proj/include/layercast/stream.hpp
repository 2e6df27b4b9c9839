#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace layercast {

/// A layered video stream: per-layer bitrate nu_l (bit/s) and the PSNR rho_l
/// (dB) reached after decoding layers 1..l. One GoP is one source message.
struct VideoStreamSpec {
  std::string name;
  std::vector<double> bitrate;
  std::vector<double> psnr;
  unsigned gop_frames = 16;
  double fps = 30.0;

  std::size_t layers() const noexcept { return bitrate.size(); }

  /// d_GoP in seconds.
  double gop_duration() const noexcept { return static_cast<double>(gop_frames) / fps; }

  void validate() const {
    if (bitrate.empty()) throw std::invalid_argument("stream needs at least one layer");
    if (psnr.size() != bitrate.size()) {
      throw std::invalid_argument("stream needs one PSNR value per layer");
    }
    for (std::size_t l = 0; l < bitrate.size(); ++l) {
      if (!(bitrate[l] > 0.0)) throw std::invalid_argument("layer bitrates must be positive");
      if (l > 0 && !(psnr[l] > psnr[l - 1])) {
        throw std::invalid_argument("cumulative PSNR must increase with every layer");
      }
    }
    if (gop_frames == 0 || !(fps > 0.0)) throw std::invalid_argument("bad GoP length or frame rate");
  }
};

}  // namespace layercast
