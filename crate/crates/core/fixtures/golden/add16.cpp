// Harness for Add16, generated from an action program.
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include "VAdd16.h"
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
  auto __fl_top = std::make_unique<VAdd16>();
  int __fl_errors = 0;
  __fl_top->in0 = 0;
  __fl_top->in1 = 0;
  __fl_top->eval();
  __fl_top->in0 = UINT64_C(3);
  __fl_top->in1 = UINT64_C(2);
  __fl_top->eval();
  if (static_cast<uint64_t>(__fl_top->out) != UINT64_C(5)) {
    std::fprintf(stderr, "root[3]: expected out == %llu, observed %llu\n", static_cast<unsigned long long>(UINT64_C(5)), static_cast<unsigned long long>(static_cast<uint64_t>(__fl_top->out)));
    ++__fl_errors;
  }
  __fl_top->final();
  return __fl_errors;
}
