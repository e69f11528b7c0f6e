#include "ctxcd/fixtures.hpp"

namespace ctxcd {

MultiContextScm endogenous_selection_scm() {
    constexpr int x = 0, t = 1, y = 2, k = 3;
    MultiContextScm scm;
    scm.base.coeff = Eigen::MatrixXd::Zero(4, 4);
    scm.base.coeff(k, x) = 1.0;
    scm.base.coeff(k, t) = 1.0;
    scm.base.noise_scale = Eigen::VectorXd::Ones(4);
    scm.base.indicator_index = k;
    scm.indicator = IndicatorConfig::make(2, 1.0);
    scm.per_context_coeff[1] = scm.base.coeff;
    scm.per_context_coeff[2] = scm.base.coeff;
    scm.per_context_coeff[2](y, t) = 1.5;
    scm.r_children[2] = {y};
    scm.edits.push_back({2, EditOp::Add, t, y});
    return scm;
}

}  // namespace ctxcd
