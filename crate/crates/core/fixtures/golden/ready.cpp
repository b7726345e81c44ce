// Harness for ReadyCounter, generated from an action program.
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include "VReadyCounter.h"
#include "verilated.h"

static std::string __fl_bin(uint64_t v, unsigned w) {
  std::string s(w, '0');
  for (unsigned i = 0; i < w; ++i) {
    if ((v >> i) & 1) s[w - 1 - i] = '1';
  }
  return s;
}

int main(int argc, char **argv) {
  Verilated::commandArgs(argc, argv);
  auto __fl_top = std::make_unique<VReadyCounter>();
  int __fl_errors = 0;
  __fl_top->clk = 0;
  __fl_top->eval();
  __fl_top->eval();
  while (static_cast<uint64_t>(__fl_top->ready)) {
    if (static_cast<uint64_t>(__fl_top->ready) != UINT64_C(1)) {
      std::fprintf(stderr, "root[1].body[0]: expected ready == %llu, observed %llu\n", static_cast<unsigned long long>(UINT64_C(1)), static_cast<unsigned long long>(static_cast<uint64_t>(__fl_top->ready)));
      ++__fl_errors;
    }
    __fl_top->clk = !__fl_top->clk;
    __fl_top->eval();
    __fl_top->clk = !__fl_top->clk;
    __fl_top->eval();
  }
  if (static_cast<uint64_t>(__fl_top->count) != UINT64_C(5)) {
    std::fprintf(stderr, "root[2]: expected count == %llu, observed %llu\n", static_cast<unsigned long long>(UINT64_C(5)), static_cast<unsigned long long>(static_cast<uint64_t>(__fl_top->count)));
    ++__fl_errors;
  }
  __fl_top->final();
  return __fl_errors;
}
