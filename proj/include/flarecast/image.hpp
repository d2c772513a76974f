#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace flarecast {

/// Reads an image as 8-bit with the requested channel count (1 or 3, BGR
/// order for colour). 16-bit files are min-max scaled to 8-bit on their own
/// range; use normalize_sequence when a whole stream must share one range.
cv::Mat read_image(const std::filesystem::path& path, int channels = 3);

/// Writes an image, creating parent directories. PNG is lossless, so a
/// read_image round trip reproduces 8-bit pixels exactly.
void write_image(const std::filesystem::path& path, const cv::Mat& image);

/// Min-max normalises a 16-bit sequence to 8-bit with one shared range.
std::vector<cv::Mat> normalize_sequence(std::span<const cv::Mat> frames);

/// ITU-R BT.601 luminance (0.299 R + 0.587 G + 0.114 B) as CV_64FC1.
/// Colour input is assumed BGR. Single-channel input is converted to double.
cv::Mat to_luminance(const cv::Mat& image);

/// Same-size 3-channel copy; grey input is replicated into every channel.
cv::Mat to_three_channel(const cv::Mat& image);

/// Hex SHA-256 digest of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Hex SHA-256 digest of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace flarecast
