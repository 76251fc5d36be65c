// Copyright 2026 The lesionseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>
#include <fstream>

#include "lesionseg/ingest.hpp"
#include "lesionseg/png_io.hpp"
#include "test_util.hpp"

using namespace lesionseg;

namespace {

std::vector<Frame> make_frames(int count, int w, int h) {
  std::vector<Frame> frames;
  for (int i = 0; i < count; ++i) {
    Frame f;
    f.index = i;
    f.image = testutil::gradient_image(w, h, i);
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_raw_rgb(const std::filesystem::path& path,
                   const std::vector<Frame>& frames) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& f : frames)
    out.write(reinterpret_cast<const char*>(f.image.pixels.data()),
              static_cast<std::streamsize>(f.image.pixels.size()));
}

TranscoderTemplates stub_templates(int w, int h, int frames) {
  TranscoderTemplates t;
  t.probe = "printf 'width=" + std::to_string(w) + "\\nheight=" +
            std::to_string(h) + "\\navg_frame_rate=10/1\\nnb_frames=" +
            std::to_string(frames) + "\\n'";
  t.decode = "cat {input}";
  t.encode = "cat > {output}";
  return t;
}

}  // namespace

TEST_CASE("png round trip preserves pixels") {
  testutil::TempDir tmp("png");
  const ImageRgb img = testutil::gradient_image(33, 21);
  write_png(tmp.path() / "x.png", img);
  CHECK(read_png(tmp.path() / "x.png") == img);
}

TEST_CASE("directory sink produces zero-padded names and lossless round trip") {
  testutil::TempDir tmp("dirsink");
  const auto dir = tmp.path() / "out";
  const std::vector<Frame> frames = make_frames(3, 64, 64);

  VideoInfo info;
  info.width = 64;
  info.height = 64;
  info.fps = 25;
  info.frame_count = 3;
  auto sink = open_frame_sink(dir, info, IoMode::frame_directory);
  for (const auto& f : frames) sink->write(f);
  sink->finalize();

  CHECK(std::filesystem::exists(dir / "000000.png"));
  CHECK(std::filesystem::exists(dir / "000001.png"));
  CHECK(std::filesystem::exists(dir / "000002.png"));

  auto source = open_frame_source(dir, IoMode::frame_directory);
  CHECK(source->info().width == 64);
  CHECK(source->info().fps == 25.0);
  CHECK(source->info().frame_count == 3);
  for (const auto& f : frames) {
    const auto got = source->next();
    REQUIRE(got.has_value());
    REQUIRE(got->index == f.index);
    REQUIRE(got->image == f.image);
  }
  CHECK_FALSE(source->next().has_value());
}

TEST_CASE("empty directory has no frames") {
  testutil::TempDir tmp("empty");
  try {
    open_frame_source(tmp.path(), IoMode::frame_directory);
    FAIL("expected DecodeFailure");
  } catch (const error& e) {
    CHECK(e.code() == errc::decode_failure);
  }
}

TEST_CASE("missing path raises NotFound") {
  try {
    open_frame_source("/nonexistent/path", IoMode::frame_directory);
    FAIL("expected NotFound");
  } catch (const error& e) {
    CHECK(e.code() == errc::not_found);
  }
}

TEST_CASE("inconsistent frame dimensions are rejected") {
  testutil::TempDir tmp("dims");
  write_png(tmp.path() / "000000.png", testutil::gradient_image(32, 32));
  write_png(tmp.path() / "000001.png", testutil::gradient_image(16, 32));
  auto source = open_frame_source(tmp.path(), IoMode::frame_directory);
  REQUIRE(source->next().has_value());
  try {
    source->next();
    FAIL("expected InconsistentDimensions");
  } catch (const error& e) {
    CHECK(e.code() == errc::inconsistent_dimensions);
  }
}

TEST_CASE("out-of-order writes are rejected") {
  testutil::TempDir tmp("order");
  VideoInfo info;
  info.width = 16;
  info.height = 16;
  auto sink = open_frame_sink(tmp.path() / "out", info, IoMode::frame_directory);
  Frame f;
  f.index = 3;
  f.image = testutil::gradient_image(16, 16);
  try {
    sink->write(f);
    FAIL("expected OutOfOrderFrame");
  } catch (const error& e) {
    CHECK(e.code() == errc::out_of_order_frame);
  }
}

TEST_CASE("video source reads raw frames from the decode command") {
  testutil::TempDir tmp("vidsrc");
  const std::vector<Frame> frames = make_frames(3, 20, 16);
  const auto raw = tmp.path() / "video.raw";
  write_raw_rgb(raw, frames);

  auto source = open_frame_source(raw, IoMode::video, stub_templates(20, 16, 3));
  CHECK(source->info().width == 20);
  CHECK(source->info().height == 16);
  CHECK(source->info().fps == 10.0);
  CHECK(source->info().frame_count == 3);
  for (const auto& f : frames) {
    const auto got = source->next();
    REQUIRE(got.has_value());
    REQUIRE(got->image == f.image);
  }
  CHECK_FALSE(source->next().has_value());
}

TEST_CASE("probe parses rational frame rates and N/A counts") {
  TranscoderTemplates t;
  t.probe = "printf 'width=320\\nheight=200\\navg_frame_rate=30000/1001\\nnb_frames=N/A\\n'";
  testutil::TempDir tmp("probe");
  const auto dummy = tmp.path() / "v.raw";
  std::ofstream(dummy) << "";
  const VideoInfo info = probe_video(dummy, t);
  CHECK(info.width == 320);
  CHECK(info.height == 200);
  CHECK(info.fps == Catch::Approx(29.97).epsilon(1e-3));
  CHECK(info.frame_count == 0);
}

TEST_CASE("an hour of HD video at 25 fps probes as 90000 frames") {
  TranscoderTemplates t;
  t.probe =
      "printf 'width=1920\\nheight=1080\\navg_frame_rate=25/1\\nnb_frames=90000\\n'";
  testutil::TempDir tmp("probe-hd");
  const auto dummy = tmp.path() / "v.mp4";
  std::ofstream(dummy) << "";
  const VideoInfo info = probe_video(dummy, t);
  CHECK(info.frame_count == 90000);
  CHECK(info.fps == 25.0);
}

TEST_CASE("frames below the 16 px minimum are rejected") {
  testutil::TempDir tmp("tiny");
  write_png(tmp.path() / "000000.png", testutil::gradient_image(8, 8));
  try {
    open_frame_source(tmp.path(), IoMode::frame_directory);
    FAIL("expected DecodeFailure");
  } catch (const error& e) {
    CHECK(e.code() == errc::decode_failure);
  }
}

TEST_CASE("probe falls back to the default rate") {
  TranscoderTemplates t;
  t.probe = "printf 'width=64\\nheight=64\\navg_frame_rate=0/0\\n'";
  testutil::TempDir tmp("probe2");
  const auto dummy = tmp.path() / "v.raw";
  std::ofstream(dummy) << "";
  CHECK(probe_video(dummy, t).fps == 25.0);
}

TEST_CASE("short reads are decode failures") {
  testutil::TempDir tmp("short");
  const auto raw = tmp.path() / "video.raw";
  {
    std::ofstream out(raw, std::ios::binary);
    const std::vector<char> bytes(20 * 16 * 3 + 100, 7);  // 1 frame + junk
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  auto source = open_frame_source(raw, IoMode::video, stub_templates(20, 16, 2));
  REQUIRE(source->next().has_value());
  try {
    source->next();
    FAIL("expected DecodeFailure");
  } catch (const error& e) {
    CHECK(e.code() == errc::decode_failure);
  }
}

TEST_CASE("a decoder that fails late surfaces as DecodeFailure") {
  testutil::TempDir tmp("late");
  const std::vector<Frame> frames = make_frames(2, 16, 16);
  const auto raw = tmp.path() / "video.raw";
  write_raw_rgb(raw, frames);
  TranscoderTemplates t = stub_templates(16, 16, 2);
  t.decode = "cat {input}; exit 3";
  auto source = open_frame_source(raw, IoMode::video, t);
  REQUIRE(source->next().has_value());
  REQUIRE(source->next().has_value());
  try {
    source->next();
    FAIL("expected DecodeFailure");
  } catch (const error& e) {
    CHECK(e.code() == errc::decode_failure);
  }
}

TEST_CASE("probe failure surfaces as DecodeFailure") {
  TranscoderTemplates t;
  t.probe = "exit 9";
  testutil::TempDir tmp("probf");
  const auto dummy = tmp.path() / "v.raw";
  std::ofstream(dummy) << "";
  try {
    probe_video(dummy, t);
    FAIL("expected DecodeFailure");
  } catch (const error& e) {
    CHECK(e.code() == errc::decode_failure);
  }
}

TEST_CASE("video sink pipes raw frames to the encode command") {
  testutil::TempDir tmp("vidsink");
  const std::vector<Frame> frames = make_frames(2, 20, 16);
  const auto out_path = tmp.path() / "encoded.bin";

  VideoInfo info;
  info.width = 20;
  info.height = 16;
  info.fps = 25;
  TranscoderTemplates t = stub_templates(20, 16, 2);
  auto sink = open_frame_sink(out_path, info, IoMode::video, t);
  for (const auto& f : frames) sink->write(f);
  sink->finalize();

  std::ifstream in(out_path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 2u * 20 * 16 * 3);
  std::string expected;
  for (const auto& f : frames)
    expected.append(reinterpret_cast<const char*>(f.image.pixels.data()),
                    f.image.pixels.size());
  CHECK(bytes == expected);
}

TEST_CASE("encoder failure is reported at finalize") {
  testutil::TempDir tmp("encfail");
  VideoInfo info;
  info.width = 16;
  info.height = 16;
  TranscoderTemplates t;
  t.encode = "cat > /dev/null; exit 5";
  auto sink = open_frame_sink(tmp.path() / "x.bin", info, IoMode::video, t);
  Frame f;
  f.index = 0;
  f.image = testutil::gradient_image(16, 16);
  sink->write(f);
  try {
    sink->finalize();
    FAIL("expected EncodeFailure");
  } catch (const error& e) {
    CHECK(e.code() == errc::encode_failure);
  }
}

TEST_CASE("probe_frame_source reports directory geometry without decoding") {
  testutil::TempDir tmp("probe-dir");
  write_png(tmp.path() / "000000.png", testutil::gradient_image(48, 32));
  write_png(tmp.path() / "000001.png", testutil::gradient_image(48, 32));
  const VideoInfo info = probe_frame_source(tmp.path(), IoMode::frame_directory);
  CHECK(info.width == 48);
  CHECK(info.height == 32);
  CHECK(info.frame_count == 2);
}
