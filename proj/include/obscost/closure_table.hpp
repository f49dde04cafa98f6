#pragma once

// Left-boundary closure block for the third-derivative stencil, rows 1..10
// of the interior operator. Solved offline as exact rationals so that the
// discrete energy identity is exact:
//   <A_h v, v>_h = -phi(v)^2/2 - (v_1..10^T Mhat v_1..10 + v_N^2) / (2 h^2)
// with phi(v) = (2 v_1 - v_2/2)/h and Mhat positive semidefinite.
// R = antisymmetric part + symmetric part; rows below couple into columns
// 10 and 11 with the interior centered stencil tail.

namespace obscost::closure {

inline constexpr int kLeftRows = 10;

inline constexpr double kLeftBlock[10][10] = {
    {4.095713209428908, -2.2933813674664343, -0.5724574265709383, -0.09747321196795258, 0.22176826954222068, 0.31387006648035304, 0.21892452512850935, 0.08851328953004751, -0.5545523363126917, 0.23566459411696442},
    {0.18482417637610912, 0.33973886907934203, 0.04983770030707381, -0.1378939179176281, -0.23352756573431144, -0.17852779545077288, 0.018062977346456927, 0.27962447379211325, 0.04227821254905785, -0.09673752871129326},
    {0.5139100338505195, -0.13324706737687722, 0.10817162794908503, -0.07477958473958211, -0.08524783656941118, -0.0685382869875681, -0.034118945788286725, -0.005620673112868762, 0.18276809967300894, -0.07964584308493504},
    {0.09583489504738862, 0.10483467890606309, 0.0071212562469757205, 0.10616407945734761, -0.06887924529778776, -0.07914675802213728, -0.09651838933853117, -0.153615960488923, 0.3295308088084809, -0.09934684348032959},
    {-0.18718993213318064, 0.23988837841298669, 0.04216692802873892, -0.015297480715502527, 0.10032094754091166, -0.07534987140949324, -0.11332802663583245, -0.19127761206886174, 0.24160324006660575, -0.025831527276232877},
    {-0.2758567631242611, 0.20088469637801945, 0.05164903082056937, 0.02205613201993073, -0.007708204439545944, 0.1064760589133706, -0.08615550279866012, -0.13125177680155034, -0.08293135187026084, 0.14300853193796684},
    {-0.20684477913232022, -0.003954416104925275, 0.03877281887329806, 0.08134651205882056, 0.07161679182153692, 0.017393772162932742, 0.10621205899184367, -0.04466924987554453, -0.5116792397718072, 0.35295852584094284},
    {-0.11282002713722, -0.2871557220821468, 0.021608413162392273, 0.17759645091345003, 0.1975238688317883, 0.09590506070914359, -0.042191942508135925, 0.08885452728090969, -0.7779362238597659, 0.4934804113794301},
    {0.5178242179100931, -0.062314359547017646, -0.1705144777347372, -0.2956040549296585, -0.21122656802181622, 0.08153600927590231, 0.4588990884510248, 0.674375466191494, 0.0890438462888771, -1.8541011026728564},
    {-0.2109285294677606, 0.10753119707958896, 0.06894065542549324, 0.07873333982980757, 0.014072246054978525, -0.131954055325711, -0.3219087604068357, -0.47400683195082766, 1.7896990140531046, 0.01335987633687759},
};

inline constexpr double kLeftDefect[10][10] = {
    {0.09571320942890785, -0.05427859554516252, -0.02927369636020943, -0.0008191584602819782, 0.017289168704520012, 0.019006651678045966, 0.006039872998094569, -0.012153368803586246, -0.01836405920129928, 0.012368032324601905},
    {-0.05427859554516252, 0.08973886907934205, -0.04170468353490171, -0.016529619505782505, 0.0031804063393376177, 0.011178450463623292, 0.007054280620765826, -0.003765624145016793, -0.010018073498979901, 0.005396834184147842},
    {-0.02927369636020943, -0.04170468353490171, 0.10817162794908503, -0.033829164246303195, -0.021540454270336126, -0.008444628083499372, 0.0023269365425056653, 0.007993870024761755, 0.006126810969135855, -0.005352593829720897},
    {-0.0008191584602819782, -0.016529619505782505, -0.033829164246303195, 0.10616407945734761, -0.042088363006645146, -0.028545313001103276, -0.007585938639855305, 0.011990245212263509, 0.01696337693941118, -0.010306751825261007},
    {0.017289168704520012, 0.0031804063393376177, -0.021540454270336126, -0.042088363006645146, 0.10032094754091166, -0.04152903792451959, -0.02085561740714777, 0.0031231283814632882, 0.015188336022394755, -0.005879640610627175},
    {0.019006651678045966, 0.011178450463623292, -0.008444628083499372, -0.028545313001103276, -0.04152903792451959, 0.1064760589133706, -0.03438086531786369, -0.01767335804620337, -0.0006976712971792594, 0.005527238306127917},
    {0.006039872998094569, 0.007054280620765826, 0.0023269365425056653, -0.007585938639855305, -0.02085561740714777, -0.03438086531786369, 0.10621205899184367, -0.043430596191840226, -0.02639007566039121, 0.015524882717053599},
    {-0.012153368803586246, -0.003765624145016793, 0.007993870024761755, 0.011990245212263509, 0.0031231283814632882, -0.01767335804620337, -0.043430596191840226, 0.08885452728090969, -0.051780378834135964, 0.009736789714301206},
    {-0.01836405920129928, -0.010018073498979901, 0.006126810969135855, 0.01696337693941118, 0.015188336022394755, -0.0006976712971792594, -0.02639007566039121, -0.051780378834135964, 0.0890438462888771, -0.032201044309875915},
    {0.012368032324601905, 0.005396834184147842, -0.005352593829720897, -0.010306751825261007, -0.005879640610627175, 0.005527238306127917, 0.015524882717053599, 0.009736789714301206, -0.032201044309875915, 0.01335987633687759},
};

}  // namespace obscost::closure
