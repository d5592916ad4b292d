#pragma once

#include <cstddef>

namespace dircn::fft {

// Centered, orthonormal 2D DFT of one complex image stored as split planes.
// Zero frequency sits at (floor(h/2), floor(w/2)). Input and output may alias.
void centered_2d(std::size_t h, std::size_t w, const double* re_in, const double* im_in, double* re_out,
                 double* im_out, bool inverse);

}  // namespace dircn::fft
