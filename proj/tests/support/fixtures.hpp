#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include <extctrl/dataset.hpp>
#include <extctrl/error.hpp>

namespace fixtures {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(EXTCTRL_TEST_DATA) / name;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Trial: 1 severe + 3 non-severe; external: 3 severe + 1 non-severe.
inline extctrl::Dataset toy() { return extctrl::load_dataset(data_path("toy_severity.csv")); }

}  // namespace fixtures

#define EXPECT_ERROR_CODE(stmt, expected)                                                    \
  do {                                                                                       \
    try {                                                                                    \
      stmt;                                                                                  \
      ADD_FAILURE() << "expected " #expected " but nothing was thrown";                      \
    } catch (const extctrl::Error& err__) {                                                  \
      EXPECT_EQ(err__.code(), extctrl::ErrorCode::expected) << err__.what();                 \
    }                                                                                        \
  } while (0)
