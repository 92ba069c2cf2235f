#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layerseg/error.hpp"

namespace layerseg {

// Per-pixel class image. Class 0 is the background above the layered
// structure, classes 1..C-2 the layers in order, class C-1 the background
// below. Valid masks are "stacked": down every column the class index never
// decreases.
struct LabelMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> classes;  // row-major, height*width

    LabelMask() = default;
    LabelMask(std::size_t h, std::size_t w) : height(h), width(w), classes(h * w, 0) {}

    std::uint8_t& at(std::size_t r, std::size_t c) { return classes[r * width + c]; }
    std::uint8_t at(std::size_t r, std::size_t c) const { return classes[r * width + c]; }

    bool operator==(const LabelMask& other) const = default;

    // -1 if every column is non-decreasing top to bottom, else the first
    // offending column.
    long first_unstacked_column() const {
        for (std::size_t c = 0; c < width; ++c) {
            for (std::size_t r = 1; r < height; ++r) {
                if (at(r, c) < at(r - 1, c)) return static_cast<long>(c);
            }
        }
        return -1;
    }

    bool is_stacked() const { return first_unstacked_column() < 0; }

    std::uint8_t max_class() const {
        std::uint8_t m = 0;
        for (std::uint8_t v : classes) m = v > m ? v : m;
        return m;
    }

    void require_labels_below(std::size_t num_classes) const {
        if (max_class() >= num_classes) {
            throw ValueError("label " + std::to_string(int(max_class())) +
                             " out of range for " + std::to_string(num_classes) + " classes");
        }
    }
};

}  // namespace layerseg
