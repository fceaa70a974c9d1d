#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vqforge {

struct VideoMeta {
  std::string id;
  int width = 0;
  int height = 0;
  int frame_count = 0;
  double fps = 0.0;
  std::string source_tag;

  void validate() const;  // width/height/frame_count >= 1, fps > 0
};

// Decoded 8-bit RGB frames, interleaved R,G,B per pixel, row-major.
// Immutable after construction by convention; all consumers take const refs.
struct FrameSequence {
  VideoMeta meta;
  std::vector<std::vector<uint8_t>> frames;  // each width*height*3 bytes

  void validate() const;
};

// Real-valued luma volume, data[(t*height + y)*width + x].
struct GrayVolume {
  int width = 0;
  int height = 0;
  int frames = 0;
  std::vector<double> data;

  double at(int x, int y, int t) const {
    return data[(static_cast<size_t>(t) * height + y) * width + x];
  }
  const double* plane(int t) const {
    return data.data() + static_cast<size_t>(t) * height * width;
  }
};

enum class VideoFormat { y4m, png_sequence_dir, raw_rgb };

VideoFormat parse_video_format(const std::string& name);

// y4m: YUV4MPEG2, C420 family only, chroma upsampled nearest-neighbor,
//      YCbCr -> RGB with BT.601 full-range coefficients.
// png_sequence_dir: every *.png in the directory, lexicographic order.
// raw_rgb: headerless interleaved RGB bytes + "<path>.json" VideoMeta sidecar.
FrameSequence load_frames(const std::string& path, VideoFormat format);

// Writes the raw bytes plus the "<path>.json" sidecar; reloading with
// load_frames(path, raw_rgb) reproduces identical bytes.
void write_raw_rgb(const FrameSequence& fs, const std::string& path);

// Per-pixel BT.601 luma Y = 0.299 R + 0.587 G + 0.114 B, kept real-valued.
GrayVolume to_gray(const FrameSequence& fs);

// meta CSV: video_id,width,height,frame_count,fps[,source_tag]
std::vector<VideoMeta> read_meta_csv(const std::string& path);

}  // namespace vqforge
