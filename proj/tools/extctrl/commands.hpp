#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace extctrl::cli {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string out_dir;  // empty: print the primary artifact to stdout
  std::string format = "json";
};

struct DataOptions {
  std::string data;
  std::vector<std::string> covariates;
};

struct WeightCmd {
  DataOptions in;
  std::string estimand = "ate";
  double band = 0.05;
};

struct BalanceCmd {
  WeightCmd w;
  double threshold = 0.1;
  std::string checklist;
};

struct BootstrapOptions {
  int replicates = 0;  // 0: no bootstrap
  double level = 0.95;
};

struct CompareCmd {
  WeightCmd w;
  std::string scale = "rd";
  std::optional<double> horizon;
  double threshold = 0.1;
  bool fail_on_overlap = false;
  std::string checklist;
  BootstrapOptions boot;
};

struct MaicCmd {
  DataOptions in;
  std::string target;
  std::string scale = "rd";
  bool match_variance = false;
  bool continuity_correction = false;
  std::string checklist;
  BootstrapOptions boot;
};

struct StcCmd {
  DataOptions in;
  std::string target;
  std::string link = "identity";
  std::string scale = "md";
  std::string checklist;
  BootstrapOptions boot;
};

struct BorrowCmd {
  std::string data;
  std::string target;
  std::vector<int> trial;     // x,n
  std::vector<int> external;  // x0,n0
  double a0 = 0.0;
  std::vector<double> prior{1.0, 1.0};
  double level = 0.95;
  std::vector<double> sweep;
  bool assume_comparable = false;
};

struct SimulateCmd {
  std::string scenario;
  std::string out;
};

struct RunCmd {
  std::string plan;
};

int ps_fit(const GlobalOptions& g, const WeightCmd& c);
int weight(const GlobalOptions& g, const WeightCmd& c);
int balance(const GlobalOptions& g, const BalanceCmd& c);
int compare(const GlobalOptions& g, const CompareCmd& c);
int maic(const GlobalOptions& g, const MaicCmd& c);
int stc(const GlobalOptions& g, const StcCmd& c);
int borrow(const GlobalOptions& g, const BorrowCmd& c);
int simulate(const GlobalOptions& g, const SimulateCmd& c);
int run(const GlobalOptions& g, const RunCmd& c);

}  // namespace extctrl::cli
