#include "vqforge/media_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vqforge/csv.hpp"
#include "vqforge/error.hpp"

namespace fs = std::filesystem;

namespace vqforge {

void VideoMeta::validate() const {
  if (width < 1 || height < 1 || frame_count < 1 || !(fps > 0.0))
    fail(Errc::bad_meta, "invalid meta for '" + id + "': " +
                             std::to_string(width) + "x" + std::to_string(height) +
                             "x" + std::to_string(frame_count) + " @ " +
                             std::to_string(fps));
}

void FrameSequence::validate() const {
  meta.validate();
  if (static_cast<int>(frames.size()) != meta.frame_count)
    fail(Errc::format_error, meta.id + ": frame count mismatch");
  size_t expect = static_cast<size_t>(meta.width) * meta.height * 3;
  for (const auto& f : frames)
    if (f.size() != expect)
      fail(Errc::format_error, meta.id + ": frame size mismatch");
}

VideoFormat parse_video_format(const std::string& name) {
  if (name == "y4m") return VideoFormat::y4m;
  if (name == "png_dir" || name == "png_sequence_dir")
    return VideoFormat::png_sequence_dir;
  if (name == "raw_rgb") return VideoFormat::raw_rgb;
  fail(Errc::format_error, "unknown video format '" + name + "'");
}

// ---------------------------------------------------------------------------
// y4m

namespace {

uint8_t clamp_u8(double v) {
  return static_cast<uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
}

// BT.601 full-range YCbCr -> RGB
void ycbcr_to_rgb(uint8_t y, uint8_t cb, uint8_t cr, uint8_t* out) {
  double yf = y, cbf = cb - 128.0, crf = cr - 128.0;
  out[0] = clamp_u8(yf + 1.402 * crf);
  out[1] = clamp_u8(yf - 0.344136 * cbf - 0.714136 * crf);
  out[2] = clamp_u8(yf + 1.772 * cbf);
}

FrameSequence load_y4m(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path);

  std::string header;
  if (!std::getline(in, header) || header.rfind("YUV4MPEG2", 0) != 0)
    fail(Errc::format_error, path + ": not a YUV4MPEG2 stream");

  int w = 0, h = 0;
  long fn = 0, fd = 0;
  std::string colorspace = "420";  // default per the format
  std::istringstream hs(header.substr(9));
  std::string tok;
  while (hs >> tok) {
    switch (tok[0]) {
      case 'W': w = std::stoi(tok.substr(1)); break;
      case 'H': h = std::stoi(tok.substr(1)); break;
      case 'F': {
        if (std::sscanf(tok.c_str() + 1, "%ld:%ld", &fn, &fd) != 2)
          fail(Errc::format_error, path + ": bad frame rate '" + tok + "'");
        break;
      }
      case 'C': colorspace = tok.substr(1); break;
      default: break;  // interlacing / aspect tags ignored
    }
  }
  if (w <= 0 || h <= 0)
    fail(Errc::format_error, path + ": missing or bad W/H");
  if (colorspace.rfind("420", 0) != 0)
    fail(Errc::format_error, path + ": only C420 chroma is supported, got C" +
                                 colorspace);
  if (fn <= 0 || fd <= 0) { fn = 25; fd = 1; }

  int cw = (w + 1) / 2, ch = (h + 1) / 2;
  size_t ysize = static_cast<size_t>(w) * h;
  size_t csize = static_cast<size_t>(cw) * ch;
  std::vector<uint8_t> ybuf(ysize), cbbuf(csize), crbuf(csize);

  FrameSequence seq;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("FRAME", 0) != 0)
      fail(Errc::format_error, path + ": expected FRAME marker");
    if (!in.read(reinterpret_cast<char*>(ybuf.data()), ysize) ||
        !in.read(reinterpret_cast<char*>(cbbuf.data()), csize) ||
        !in.read(reinterpret_cast<char*>(crbuf.data()), csize))
      fail(Errc::format_error, path + ": truncated frame payload");

    std::vector<uint8_t> rgb(ysize * 3);
    for (int yy = 0; yy < h; ++yy) {
      for (int xx = 0; xx < w; ++xx) {
        size_t ci = static_cast<size_t>(yy / 2) * cw + xx / 2;  // nearest neighbor
        size_t pi = static_cast<size_t>(yy) * w + xx;
        ycbcr_to_rgb(ybuf[pi], cbbuf[ci], crbuf[ci], &rgb[pi * 3]);
      }
    }
    seq.frames.push_back(std::move(rgb));
  }
  if (seq.frames.empty()) fail(Errc::empty_error, path + ": zero frames");

  seq.meta.id = fs::path(path).stem().string();
  seq.meta.width = w;
  seq.meta.height = h;
  seq.meta.frame_count = static_cast<int>(seq.frames.size());
  seq.meta.fps = static_cast<double>(fn) / static_cast<double>(fd);
  seq.validate();
  return seq;
}

// ---------------------------------------------------------------------------
// PNG sequence directory

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

std::vector<uint8_t> load_png_rgb(const std::string& path, int& w, int& h) {
  PngReadCloser c;
  c.fp = std::fopen(path.c_str(), "rb");
  if (!c.fp) fail(Errc::io_error, "cannot open " + path);

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, c.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    fail(Errc::format_error, path + ": not a PNG file");

  c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!c.png) fail(Errc::io_error, "libpng init failed");
  c.info = png_create_info_struct(c.png);
  if (!c.info) fail(Errc::io_error, "libpng info init failed");
  if (setjmp(png_jmpbuf(c.png)))
    fail(Errc::format_error, path + ": PNG decode error");

  png_init_io(c.png, c.fp);
  png_set_sig_bytes(c.png, 8);
  png_read_info(c.png, c.info);

  // normalize everything to 8-bit RGB
  png_set_expand(c.png);
  png_set_strip_16(c.png);
  png_set_strip_alpha(c.png);
  png_set_gray_to_rgb(c.png);
  png_read_update_info(c.png, c.info);

  w = static_cast<int>(png_get_image_width(c.png, c.info));
  h = static_cast<int>(png_get_image_height(c.png, c.info));
  if (png_get_channels(c.png, c.info) != 3)
    fail(Errc::format_error, path + ": unexpected channel count after expand");

  std::vector<uint8_t> rgb(static_cast<size_t>(w) * h * 3);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = rgb.data() + static_cast<size_t>(y) * w * 3;
  png_read_image(c.png, rows.data());
  png_read_end(c.png, nullptr);
  return rgb;
}

FrameSequence load_png_dir(const std::string& path) {
  if (!fs::is_directory(path))
    fail(Errc::io_error, path + " is not a directory");
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.is_regular_file() && e.path().extension() == ".png")
      files.push_back(e.path().string());
  }
  if (files.empty()) fail(Errc::empty_error, path + ": no PNG frames");
  std::sort(files.begin(), files.end());

  FrameSequence seq;
  int w = 0, h = 0;
  for (const auto& f : files) {
    int fw = 0, fh = 0;
    auto rgb = load_png_rgb(f, fw, fh);
    if (seq.frames.empty()) {
      w = fw;
      h = fh;
    } else if (fw != w || fh != h) {
      fail(Errc::format_error, f + ": frame size " + std::to_string(fw) + "x" +
                                   std::to_string(fh) + " differs from " +
                                   std::to_string(w) + "x" + std::to_string(h));
    }
    seq.frames.push_back(std::move(rgb));
  }
  seq.meta.id = fs::path(path).filename().string();
  seq.meta.width = w;
  seq.meta.height = h;
  seq.meta.frame_count = static_cast<int>(seq.frames.size());
  seq.meta.fps = 30.0;  // PNG sequences carry no timing; nominal rate
  seq.validate();
  return seq;
}

// ---------------------------------------------------------------------------
// raw RGB + JSON sidecar

VideoMeta read_meta_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open sidecar " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format_error, path + ": " + e.what());
  }
  VideoMeta meta;
  try {
    meta.id = j.at("id").get<std::string>();
    meta.width = j.at("width").get<int>();
    meta.height = j.at("height").get<int>();
    meta.frame_count = j.at("frame_count").get<int>();
    meta.fps = j.at("fps").get<double>();
    if (j.contains("source_tag")) meta.source_tag = j["source_tag"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format_error, path + ": " + e.what());
  }
  meta.validate();
  return meta;
}

FrameSequence load_raw_rgb(const std::string& path) {
  VideoMeta meta = read_meta_sidecar(path + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path);

  size_t frame_bytes = static_cast<size_t>(meta.width) * meta.height * 3;
  FrameSequence seq;
  seq.meta = meta;
  for (int t = 0; t < meta.frame_count; ++t) {
    std::vector<uint8_t> buf(frame_bytes);
    if (!in.read(reinterpret_cast<char*>(buf.data()), frame_bytes))
      fail(Errc::format_error, path + ": truncated at frame " + std::to_string(t));
    seq.frames.push_back(std::move(buf));
  }
  char extra;
  if (in.read(&extra, 1))
    fail(Errc::format_error, path + ": trailing bytes beyond sidecar frame_count");
  if (seq.frames.empty()) fail(Errc::empty_error, path + ": zero frames");
  seq.validate();
  return seq;
}

}  // namespace

FrameSequence load_frames(const std::string& path, VideoFormat format) {
  switch (format) {
    case VideoFormat::y4m: return load_y4m(path);
    case VideoFormat::png_sequence_dir: return load_png_dir(path);
    case VideoFormat::raw_rgb: return load_raw_rgb(path);
  }
  fail(Errc::format_error, "unreachable format");
}

void write_raw_rgb(const FrameSequence& fs_in, const std::string& path) {
  fs_in.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  for (const auto& f : fs_in.frames)
    out.write(reinterpret_cast<const char*>(f.data()), f.size());
  if (!out) fail(Errc::io_error, "short write to " + path);

  nlohmann::json j{{"id", fs_in.meta.id},
                   {"width", fs_in.meta.width},
                   {"height", fs_in.meta.height},
                   {"frame_count", fs_in.meta.frame_count},
                   {"fps", fs_in.meta.fps},
                   {"source_tag", fs_in.meta.source_tag}};
  std::ofstream side(path + ".json");
  if (!side) fail(Errc::io_error, "cannot write " + path + ".json");
  side << j.dump(2) << "\n";
}

GrayVolume to_gray(const FrameSequence& fs) {
  fs.validate();
  GrayVolume vol;
  vol.width = fs.meta.width;
  vol.height = fs.meta.height;
  vol.frames = fs.meta.frame_count;
  vol.data.resize(static_cast<size_t>(vol.width) * vol.height * vol.frames);
  size_t n = static_cast<size_t>(vol.width) * vol.height;
  for (int t = 0; t < vol.frames; ++t) {
    const uint8_t* src = fs.frames[t].data();
    double* dst = vol.data.data() + static_cast<size_t>(t) * n;
    for (size_t i = 0; i < n; ++i) {
      dst[i] = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    }
  }
  return vol;
}

std::vector<VideoMeta> read_meta_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int c_id = t.column("video_id"), c_w = t.column("width"),
      c_h = t.column("height"), c_n = t.column("frame_count"),
      c_fps = t.column("fps"), c_tag = t.column("source_tag");
  if (c_id < 0 || c_w < 0 || c_h < 0 || c_n < 0 || c_fps < 0)
    fail(Errc::format_error,
         path + ": need columns video_id,width,height,frame_count,fps");
  std::vector<VideoMeta> out;
  for (const auto& row : t.rows) {
    VideoMeta m;
    m.id = row[c_id];
    m.width = static_cast<int>(parse_int(row[c_w], "width"));
    m.height = static_cast<int>(parse_int(row[c_h], "height"));
    m.frame_count = static_cast<int>(parse_int(row[c_n], "frame_count"));
    m.fps = parse_double(row[c_fps], "fps");
    if (c_tag >= 0) m.source_tag = row[c_tag];
    m.validate();
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace vqforge
