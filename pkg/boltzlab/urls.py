"""boltzlab URL Configuration"""
from django.contrib import admin
from django.urls import path

from kinetic.views import AboutView, RunListView, RunReportView


urlpatterns = [
    path('admin/', admin.site.urls),
    path('', RunListView.as_view(), name='runs'),
    path('runs/<int:run_id>/', RunReportView.as_view(), name='run-report'),
    path('about/', AboutView.as_view(), name='about'),
]
