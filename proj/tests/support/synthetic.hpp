#ifndef DISPCOMP_TESTS_SYNTHETIC_HPP
#define DISPCOMP_TESTS_SYNTHETIC_HPP

// Shared paper-scale synthetic design for tests.

#include <vector>

#include "dispcomp/io.hpp"

namespace testdata {

inline dispcomp::io::RunConfig paper_config() {
  dispcomp::io::RunConfig c;
  c.geometry = dispcomp::Geometry{9.364e6, 0.605, (43 + 33 / 60.0 + 37 / 3600.0) * M_PI / 180};
  c.capacitor = dispcomp::Capacitor{11519.97, -1};
  c.beam = dispcomp::Beam(1065.7, 7.67);
  c.coeff_per_U2 = 1.388e-4;
  c.synthetic.voltages = {0, 30, 60, 90, 120, 150, 180, 210, 240, 260, 280,
                          300, 320, 340, 360, 380, 400, 410, 424};
  c.synthetic.phase_sigma_base = 0.02;
  c.synthetic.phase_sigma_per_rad = 0.002;
  c.synthetic.vis_sigma = 0.01;
  return c;
}

inline dispcomp::io::SyntheticDesign noiseless(dispcomp::io::SyntheticDesign d) {
  d.add_noise = false;
  return d;
}

}  // namespace testdata

#endif
