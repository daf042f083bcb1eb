#include "mpm/datasets.hpp"
#include "mpm/errors.hpp"

namespace mpm::datasets {

Dataset hald() {
    const double x1[] = {7, 1, 11, 11, 7, 11, 3, 1, 2, 21, 1, 11, 10};
    const double x2[] = {26, 29, 56, 31, 52, 55, 71, 31, 54, 47, 40, 66, 68};
    const double x3[] = {6, 15, 8, 8, 6, 9, 17, 22, 18, 4, 23, 9, 8};
    const double x4[] = {60, 52, 20, 47, 33, 22, 6, 44, 22, 26, 34, 12, 12};
    const double y[] = {78.5, 74.3, 104.3, 87.6, 95.9, 109.2, 102.7, 72.5, 93.1, 115.9, 83.8, 113.3, 109.4};
    Eigen::MatrixXd X(13, 5);
    Eigen::VectorXd v(13);
    for (int i = 0; i < 13; ++i) {
        X.row(i) << 1.0, x1[i], x2[i], x3[i], x4[i];
        v(i) = y[i];
    }
    return Dataset(X, v, {"c", "x1", "x2", "x3", "x4"}, "y");
}

Dataset anova() {
    // (A, B) cells in the order low/low, low/high, high/low, high/high; low codes +1.
    const double yields[4][3] = {{28, 25, 27}, {18, 19, 23}, {36, 32, 32}, {31, 30, 29}};
    const double a_code[4] = {1, 1, -1, -1};
    const double b_code[4] = {1, -1, 1, -1};
    Eigen::MatrixXd X(12, 4);
    Eigen::VectorXd y(12);
    int r = 0;
    for (int cell = 0; cell < 4; ++cell)
        for (int rep = 0; rep < 3; ++rep, ++r) {
            X.row(r) << 1.0, a_code[cell], b_code[cell], a_code[cell] * b_code[cell];
            y(r) = yields[cell][rep];
        }
    return Dataset(X, y, {"mu", "A", "B", "AB"}, "yield");
}

ModelClass hald_nested_class() { return ModelClass::nested(5, {1, 3, 2}, {0, 4}); }
ModelClass hald_all_class() { return ModelClass::all_subsets(5, {0}); }

ModelClass anova_all_class() { return ModelClass::all_subsets(4, {0}); }
ModelClass anova_graphical_class() { return ModelClass::graphical(4, {{}, {}, {}, {1, 2}}, {0}); }
ModelClass anova_unusual_class() {
    std::vector<ModelIndex> models;
    for (const char *s : {"1011", "1101", "1110", "1111"}) models.push_back(ModelIndex::from_string(s));
    return ModelClass::explicit_list(models, {0});
}

ExpectedTable expected_hald_nested() {
    ExpectedTable t;
    t.title = "Hald data, nested sequence";
    t.models = {"10001", "11001", "11011", "11111"};
    t.probs = {0.0002, 0.3396, 0.5040, 0.1562};
    t.risks = {0, -808.81, -816.47, -814.43};
    t.alt_probs = {0.0005, 0.4504, 0.4455, 0.1036};
    t.alt_risks = {0, -808.32, -810.67, -808.31};
    t.prob_tolerance = 0.05;
    t.risk_tolerance = 1.0;
    return t;
}

ExpectedTable expected_hald_all() {
    ExpectedTable t;
    t.title = "Hald data, all models with intercept";
    t.models = {"10000", "11000", "10100", "10010", "10001", "11100", "11010", "11001",
                "10110", "10101", "10011", "11110", "11101", "11011", "10111", "11111"};
    t.probs = {0.000003, 0.000012, 0.000026, 0.000002, 0.000058, 0.275484, 0.000006, 0.107798,
               0.000229, 0.000018, 0.003785, 0.170990, 0.190720, 0.159959, 0.041323, 0.049587};
    t.risks = {2652.44, 1207.04, 854.85, 1864.41, 838.20, 8.19, 1174.14, 29.73,
               353.72, 821.15, 118.59, 1.21, 0.18, 1.71, 20.42, 0.47};
    t.inclusion = {0.954556, 0.728377, 0.425881, 0.553248};
    t.prob_tolerance = 0.05;
    t.risk_tolerance = 0.0; // risks compared by ordering only
    return t;
}

ExpectedTable expected_anova(int scenario) {
    ExpectedTable t;
    t.prob_tolerance = 0.02;
    t.risk_tolerance = 0.05;
    switch (scenario) {
    case 1:
        t.title = "2x2 factorial, all models";
        t.models = {"1000", "1100", "1010", "1001", "1110", "1101", "1011", "1111"};
        t.probs = {0.0008, 0.0342, 0.0009, 0.0003, 0.6019, 0.0133, 0.0003, 0.3483};
        t.risks = {235.47, 58.78, 177.78, 237.43, 1.083, 60.73, 179.74, 3.04};
        t.inclusion = {0.9977, 0.9514, 0.3621};
        break;
    case 2:
        t.title = "2x2 factorial, interactions only with both main effects";
        t.models = {"1000", "1100", "1010", "1110", "1111"};
        t.probs = {0.0009, 0.0347, 0.0009, 0.6103, 0.3532};
        t.risks = {237.21, 60.33, 177.85, 0.97, 3.05};
        t.inclusion = {0.9982, 0.9644, 0.3532};
        break;
    case 3:
        t.title = "2x2 factorial, unusual classical models";
        t.models = {"1011", "1101", "1110", "1111"};
        t.probs = {0.0003, 0.0138, 0.6245, 0.3614};
        t.risks = {180.19, 64.93, 1.01, 2.78};
        t.inclusion = {0.9997, 0.9862, 0.3754};
        break;
    default: throw ConfigError("ANOVA scenario must be 1, 2 or 3");
    }
    return t;
}

} // namespace mpm::datasets
