from kinetic.views.runs import AboutView, RunListView, RunReportView
