#include "opau/table10.hpp"

namespace opau {

namespace {

struct CoeffRow {
  double c[6];
  double d[4];
};

CoeffRow coeffs_for(BasisKind kind) {
  switch (kind) {
    case BasisKind::CP1:
      return {{0.4346338199528298, 0.7582218699682254, 0.3178149433090529,
               0.057037974292444685, 0.0040009116269871334, 9.932042145345177e-05},
              {-0.42263720399740756, 0.1446324151547079, -0.0060106466615319236,
               0.0002440520667994119}};
    case BasisKind::CP2:
      return {{0.2664672913492625, 0.34803047019467215, 0.161806740860617,
               0.030197992889731528, 0.002163176409556791, 5.4425219890802244e-05},
              {0.16740399142900575, 0.08512431596790718, 0.0026461214606926624,
               0.00014813750145571406}};
    case BasisKind::LAU:
      return {{1.8360445235354788, -2.9554505909267266, 1.638736801888696,
               -0.31774975883776296, -0.023982818970702, 0.011142344922587972},
              {-0.5890262199320808, -0.09392233765424439, 0.003915139808859812,
               0.006420352790087902}};
    case BasisKind::LEG:
      return {{0.32073373302075475, 0.7142799668606886, 0.4246816357328257,
               0.023434093682345926, 0.007618745990466922, 0.0002120535423305138},
              {0.35334130018360843, 0.21467682957840964, 0.008611328149930994,
               0.0005072095551410509}};
    case BasisKind::HP1:
      return {{1.1371963424021352, 1.7979419128449188, 1.1020770550187182,
               0.3294885720434351, 0.04271857995060412, 0.0020840356797464945},
              {1.0846459888019664, 0.30850156552330404, -0.041635924695219075,
               0.002240515203527783}};
    case BasisKind::HP2:
      return {{0.462091554274137, 0.4839321106420414, 0.1816410862837883,
               0.0303762525152446, 0.002074690747081737, 5.145762051699321e-05},
              {0.24024359431260522, 0.07515668172628485, 0.00312816654786619,
               0.00012709353203643316}};
  }
  throw std::logic_error("unreachable basis kind");
}

}  // namespace

OpauParams bundled_table10(BasisKind kind) {
  const CoeffRow row = coeffs_for(kind);
  OpauParams params;
  params.basis = kind;
  params.k = 5;
  params.l = 4;
  params.c = Eigen::Map<const Eigen::VectorXd>(row.c, 6);
  params.d = Eigen::Map<const Eigen::VectorXd>(row.d, 4);
  params.safe = true;
  return params;
}

}  // namespace opau
