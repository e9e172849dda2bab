#pragma once

#include <stdexcept>

namespace optnet {

// Direction blocks in the flat amplitude basis, in storage order.
enum class Dir : int { R = 0, U = 1, L = 2, D = 3 };

inline constexpr Dir kDirs[4] = {Dir::R, Dir::U, Dir::L, Dir::D};

inline char dir_char(Dir s) {
  switch (s) {
    case Dir::R: return 'r';
    case Dir::U: return 'u';
    case Dir::L: return 'l';
    case Dir::D: return 'd';
  }
  return '?';
}

// Flat index map for the amplitude basis (r-block; u-block; l-block; d-block).
//
// Cylinder / torus (fixed k_x): block size Ny, index = block*Ny + (n-1).
// Plane: block size Nx*Ny, n fastest within a block:
//   index = block*Nx*Ny + (m-1)*Ny + (n-1).
//
// Rows n = 1..Ny count downward from the top boundary; columns m = 1..Nx.
class IndexMap {
 public:
  IndexMap(int ny, int nx = 1) : ny_(ny), nx_(nx) {
    if (ny < 1 || nx < 1) throw std::domain_error("IndexMap: sizes must be >= 1");
  }

  int block_size() const { return ny_ * nx_; }
  int size() const { return 4 * ny_ * nx_; }
  int ny() const { return ny_; }
  int nx() const { return nx_; }

  // 0-based flat index from direction and 1-based (n[,m]).
  int at(Dir s, int n, int m = 1) const {
    check(n, m);
    return static_cast<int>(s) * block_size() + (m - 1) * ny_ + (n - 1);
  }

  struct Site {
    Dir s;
    int n;  // 1-based row
    int m;  // 1-based column
  };

  Site site(int flat) const {
    if (flat < 0 || flat >= size()) throw std::domain_error("IndexMap: flat index out of range");
    const int b = flat / block_size();
    const int rem = flat % block_size();
    return Site{static_cast<Dir>(b), rem % ny_ + 1, rem / ny_ + 1};
  }

 private:
  void check(int n, int m) const {
    if (n < 1 || n > ny_ || m < 1 || m > nx_)
      throw std::domain_error("IndexMap: (n,m) out of range");
  }

  int ny_;
  int nx_;
};

}  // namespace optnet
