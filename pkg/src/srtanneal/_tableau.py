"""Butcher tableaus for the embedded explicit Runge-Kutta pairs.

Coefficients are the classic Dormand-Prince 5(4) and 8(5,3) sets (Hairer,
Norsett & Wanner, "Solving Ordinary Differential Equations I"), stored to
full double precision.  Layout follows the convention: K has n_stages + 1
rows, with the extra row holding f(t + h, y_new) which doubles as the first
stage of the next step.
"""

import numpy as np

# Dormand-Prince 5(4): 6 working stages + reused f(t+h, y_new)
DP5_A = np.array([[  0.                ,   0.                ,   0.                ,   0.                ,
    0.                ],
 [  0.2               ,   0.                ,   0.                ,   0.                ,
    0.                ],
 [  0.075             ,   0.225             ,   0.                ,   0.                ,
    0.                ],
 [  0.9777777777777777,  -3.7333333333333334,   3.5555555555555554,   0.                ,
    0.                ],
 [  2.9525986892242035, -11.595793324188385 ,   9.822892851699436 ,  -0.2908093278463649,
    0.                ],
 [  2.8462752525252526, -10.757575757575758 ,   8.906422717743473 ,   0.2784090909090909,
   -0.2735313036020583]])
DP5_B = np.array([ 0.09114583333333333,  0.                 ,  0.44923629829290207,  0.6510416666666666 ,
 -0.322376179245283  ,  0.13095238095238096])
DP5_C = np.array([0.                , 0.2               , 0.3               , 0.8               , 0.8888888888888888,
 1.                ])
DP5_E = np.array([-0.0012326388888888888,  0.                   ,  0.0042527702905061394, -0.03697916666666667  ,
  0.05086379716981132  , -0.0419047619047619   ,  0.025                ])

# Dormand-Prince 8(5,3): 12 working stages + reused f(t+h, y_new);
# the embedded 5th and 3rd order estimates are combined for error control
DOP853_A = np.array([[ 0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00],
 [ 5.2600151958767730e-02,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00],
 [ 1.9725056984537900e-02,  5.9175170953613701e-02,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00],
 [ 2.9587585476806851e-02,  0.0000000000000000e+00,  8.8762756430420545e-02,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00],
 [ 2.4136513415926669e-01,  0.0000000000000000e+00, -8.8454947932828609e-01,
   9.2483400326179199e-01,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00],
 [ 3.7037037037037035e-02,  0.0000000000000000e+00,  0.0000000000000000e+00,
   1.7082860872947386e-01,  1.2546768756682242e-01,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00],
 [ 3.7109375000000000e-02,  0.0000000000000000e+00,  0.0000000000000000e+00,
   1.7025221101954405e-01,  6.0216538980455959e-02, -1.7578125000000000e-02,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00],
 [ 3.7092000118504789e-02,  0.0000000000000000e+00,  0.0000000000000000e+00,
   1.7038392571223998e-01,  1.0726203044637328e-01, -1.5319437748624402e-02,
   8.2737891638140233e-03,  0.0000000000000000e+00,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00],
 [ 6.2411095871607569e-01,  0.0000000000000000e+00,  0.0000000000000000e+00,
  -3.3608926294469414e+00, -8.6821934684172597e-01,  2.7592099699446710e+01,
   2.0154067550477894e+01, -4.3489884181069961e+01,  0.0000000000000000e+00,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00],
 [ 4.7766253643826434e-01,  0.0000000000000000e+00,  0.0000000000000000e+00,
  -2.4881146199716677e+00, -5.9029082683684297e-01,  2.1230051448181193e+01,
   1.5279233632882423e+01, -3.3288210968984863e+01, -2.0331201708508627e-02,
   0.0000000000000000e+00,  0.0000000000000000e+00,  0.0000000000000000e+00],
 [-9.3714243008598730e-01,  0.0000000000000000e+00,  0.0000000000000000e+00,
   5.1863724288440638e+00,  1.0914373489967295e+00, -8.1497870107469268e+00,
  -1.8520065659996959e+01,  2.2739487099350505e+01,  2.4936055526796523e+00,
  -3.0467644718982196e+00,  0.0000000000000000e+00,  0.0000000000000000e+00],
 [ 2.2733101475165380e+00,  0.0000000000000000e+00,  0.0000000000000000e+00,
  -1.0534495466737249e+01, -2.0008720582248625e+00, -1.7958931863118799e+01,
   2.7948884529419960e+01, -2.8589982771350235e+00, -8.8728569335306293e+00,
   1.2360567175794303e+01,  6.4339274601576357e-01,  0.0000000000000000e+00]])
DOP853_B = np.array([ 0.054293734116568765,  0.                  ,  0.                  ,  0.                  ,
  0.                  ,  4.450312892752409   ,  1.8915178993145003  , -5.801203960010585   ,
  0.3111643669578199  , -0.1521609496625161  ,  0.20136540080403034 ,  0.04471061572777259 ])
DOP853_C = np.array([0.                 , 0.05260015195876773, 0.0789002279381516 , 0.1183503419072274 ,
 0.2816496580927726 , 0.3333333333333333 , 0.25               , 0.3076923076923077 ,
 0.6512820512820513 , 0.6                , 0.8571428571428571 , 1.                 ])
DOP853_E3 = np.array([-0.18980075407240762,  0.                 ,  0.                 ,  0.                 ,
  0.                 ,  4.450312892752409  ,  1.8915178993145003 , -5.801203960010585  ,
 -0.4226823213237919 , -0.1521609496625161 ,  0.20136540080403034,  0.02265179219836082,
  0.                 ])
DOP853_E5 = np.array([ 0.01312004499419488 ,  0.                  ,  0.                  ,  0.                  ,
  0.                  , -1.2251564463762044  , -0.4957589496572502  ,  1.6643771824549864  ,
 -0.35032884874997366 ,  0.3341791187130175  ,  0.08192320648511571 , -0.022355307863886294,
  0.                  ])


class Tableau:
    """Embedded explicit RK pair plus the control metadata the stepper needs.

    ``imag_stability`` is the extent of the linear stability region along the
    imaginary axis (used to cap steps for oscillatory problems), verified in
    the test suite against the stability polynomial.
    """

    def __init__(self, name, a, b, c, error_mode, e=None, e3=None, e5=None,
                 error_exponent=None, imag_stability=None):
        self.name = name
        self.a = a
        self.b = b
        self.c = c
        self.n_stages = len(b)
        self.error_mode = error_mode
        self.e = e
        self.e3 = e3
        self.e5 = e5
        self.error_exponent = error_exponent
        self.imag_stability = imag_stability


DP5 = Tableau(
    "dp5", DP5_A, DP5_B, DP5_C, error_mode="simple", e=DP5_E,
    error_exponent=-1.0 / 5.0, imag_stability=3.30,
)

DOP853 = Tableau(
    "dop853", DOP853_A, DOP853_B, DOP853_C, error_mode="dop853",
    e3=DOP853_E3, e5=DOP853_E5,
    error_exponent=-1.0 / 8.0, imag_stability=5.90,
)

TABLEAUS = {"dp5": DP5, "dop853": DOP853}
