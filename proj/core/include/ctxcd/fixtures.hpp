#ifndef CTXCD_FIXTURES_HPP
#define CTXCD_FIXTURES_HPP

#include "ctxcd/scm.hpp"

namespace ctxcd {

/// Endogenous indicator with a context-specific link: X and T both cause the
/// indicator, R = 1 + [X + T + eta >= median], and Y = 1.5 T + eta only in
/// context 2 (Y = eta in context 1). Graph columns are X, T, Y, R.
MultiContextScm endogenous_selection_scm();

}  // namespace ctxcd

#endif  // CTXCD_FIXTURES_HPP
