#pragma once

#include <string>

#include "metassl/grid.hpp"

namespace metassl {

// Fixed-width little-endian binary dumps. Header: 4-byte magic, version
// byte, then H, W, C as uint32. Payload is H*W*C elements, class/channel
// fastest-varying: PMAP and IMG0 carry float32, LMAP uint16, QMAP uint8
// region codes (0=UC 1=US 2=DC 3=DS) with C=1.

void write_pmap(const ProbMap& p, const std::string& path);
ProbMap read_pmap(const std::string& path);

void write_lmap(const LabelMap& y, const std::string& path);
LabelMap read_lmap(const std::string& path);

void write_qmap(const RegionMap& r, const std::string& path);
RegionMap read_qmap(const std::string& path);

void write_img(const Image& img, const std::string& path);
Image read_img(const std::string& path);

// P5 grayscale rendering of a RegionMap: UC=255, US=170, DC=85, DS=0.
void write_region_pgm(const RegionMap& r, const std::string& path);

// P5 rendering of a LabelMap with classes spread over [0,255].
void write_label_pgm(const LabelMap& y, int num_classes, const std::string& path);

// Compact decimal formatting used for deterministic CSV streams.
std::string format_number(double v);

}  // namespace metassl
