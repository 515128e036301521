#pragma once

#include "ttstn/config.hpp"
#include "ttstn/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <string>

#ifndef TTSTN_SOURCE_DIR
#define TTSTN_SOURCE_DIR "."
#endif

namespace test {

inline std::filesystem::path source_path(const std::string& rel) { return std::filesystem::path(TTSTN_SOURCE_DIR) / rel; }
inline std::filesystem::path config_path(const std::string& name) { return source_path("configs/" + name); }

}  // namespace test

#define CHECK_ERROR_CODE(expr, ecode)                                  \
    do {                                                               \
        bool thrown_ = false;                                          \
        try {                                                          \
            (void)(expr);                                              \
        } catch (const ttstn::Error& e_) {                             \
            thrown_ = true;                                            \
            CHECK_MESSAGE(e_.code() == (ecode), e_.what());            \
        }                                                              \
        CHECK_MESSAGE(thrown_, "expected an error from " #expr);       \
    } while (0)
