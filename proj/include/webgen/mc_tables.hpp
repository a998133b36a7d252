#pragma once

namespace webgen::detail {

extern const int kEdgeTable[256];
extern const int kTriTable[256][16];
extern const int kEdgeCorners[12][2];
extern const int kCornerOffset[8][3];

}  // namespace webgen::detail
