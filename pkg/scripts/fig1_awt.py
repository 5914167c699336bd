"""Waiting time of SEC-matched SWC at 5 dB for the four channels of the fig1 target."""

from scanwait import CorrelationSpec, FadingModel, Modulation, SeriesConfig, ThresholdProfile, match_sec_anpe, metrics

cfg = SeriesConfig(1e-6, 400)
for m in (1, 3):
    for spec in (CorrelationSpec.iid(3), CorrelationSpec.exponential(3, 0.9)):
        model = FadingModel.exponential_profile(m, 10 ** 0.5, 3, 0.0)
        res = match_sec_anpe(model, spec, 0.0, Modulation.pam(4), cfg)
        rep = metrics(model, spec, ThresholdProfile(res.gT1, 0.0, 3), cfg)
        print(f"m={m} rho={spec.rho:<6g} gT1={res.gT1:.4f} anpe={rep.anpe_swc:.4f} awt={rep.awt:.4f}")
