#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "anodiss/util.hpp"

namespace anodiss {

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw config_error("cannot open " + path);
  std::ostringstream o;
  o << f.rdbuf();
  return o.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw config_error("cannot write " + path);
  f << content;
  if (!f) throw config_error("write failed for " + path);
}

uint64_t hash_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw config_error("cannot open " + path);
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (f) {
    f.read(buf, sizeof buf);
    h = fnv1a64(buf, (size_t)f.gcount(), h);
  }
  return h;
}

int thread_count() {
  if (const char* s = std::getenv("ANODISS_THREADS")) {
    int v = std::atoi(s);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? (int)hc : 1;
}

}  // namespace anodiss
