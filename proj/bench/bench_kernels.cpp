// Timing comparison of the OpenMP kernels against their serial references.
#include <chrono>
#include <cstdio>

#include "mufia/attack.hpp"
#include "mufia/blockdct.hpp"
#include "mufia/classifier.hpp"
#include "mufia/imageio.hpp"

int main() {
    std::printf("bench placeholder\n");
    return 0;
}
